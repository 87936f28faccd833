"""SMOTE oversampling, geometric privacy attacks on its output, recall bounds
and baseline privacy evaluations."""

__version__ = "0.1.0"

from .attacks import (
    AttackConfig,
    DistinSMOTE,
    ReconSMOTE,
    distin_smote,
    precision_recall_match,
    recon_smote,
)
from .baselines import MiaConfig, auc, dcr, groundhog_features, linkability, mia_game, naive_distinguish
from .bounds import BoundInputs, approx_recall_bound, binom_tail_ge3, exact_recall_bound, sweep
from .data import FixtureSpec, LabeledDataset, Standardizer, load_csv, make_fixture, save_csv
from .geometry import GeometryConfig
from .knn import NeighborIndex, build_knn_graph, mutuality_fraction
from .learners import LearnerConfig, LogisticClassifier, TreeEnsembleClassifier, train_learner
from .smote import SMOTE, SmoteConfig, augment, smote_oversample

__all__ = [
    "AttackConfig", "BoundInputs", "DistinSMOTE", "FixtureSpec", "GeometryConfig",
    "LabeledDataset", "LearnerConfig", "LogisticClassifier", "MiaConfig", "NeighborIndex",
    "ReconSMOTE", "SMOTE", "SmoteConfig", "Standardizer", "TreeEnsembleClassifier",
    "approx_recall_bound", "auc", "augment", "binom_tail_ge3", "build_knn_graph", "dcr",
    "distin_smote", "exact_recall_bound", "groundhog_features", "linkability", "load_csv",
    "make_fixture", "mia_game", "mutuality_fraction", "naive_distinguish",
    "precision_recall_match", "recon_smote", "save_csv", "smote_oversample", "sweep",
    "train_learner",
]

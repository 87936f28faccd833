"""Reference privacy metrics and attacks to compare the geometric attacks against."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import rankdata

from ._validation import check_count
from .data import REAL, SYNTHETIC, LabeledDataset
from .learners import LearnerConfig, train_learner
from .smote import SmoteConfig, augment, smote_oversample


def auc(scores, labels):
    """Area under the ROC curve as a Mann-Whitney statistic with midranks."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def dcr(syn, real):
    """Mean distance from each synthetic row to its closest real row."""
    S = syn.features if isinstance(syn, LabeledDataset) else np.asarray(syn, dtype=float)
    R = real.features if isinstance(real, LabeledDataset) else np.asarray(real, dtype=float)
    if len(R) == 0:
        raise ValueError("dcr needs at least one real row")
    if S.shape[1] != R.shape[1]:
        raise ValueError(f"dimension mismatch: {S.shape[1]} vs {R.shape[1]}")
    if len(S) == 0:
        return 0.0
    dist, _ = cKDTree(R).query(S, k=1)
    return float(np.mean(dist))


def random_split(d, rng):
    """Random partition of ``d`` columns into two halves (sizes differ by at most one)."""
    if d < 2:
        raise ValueError("linkability needs at least two features")
    perm = rng.permutation(d)
    half = d // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def _nearest(S, R):
    """Index of the nearest row of ``S`` for each row of ``R``; ties go to the lower index."""
    diff = R[:, None, :] - S[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return np.argmin(sq, axis=1)


def linkability_split(syn, real, split):
    S = np.asarray(syn.features if isinstance(syn, LabeledDataset) else syn, dtype=float)
    R = np.asarray(real.features if isinstance(real, LabeledDataset) else real, dtype=float)
    a, b = (np.asarray(part, dtype=np.intp) for part in split)
    if len(a) == 0 or len(b) == 0 or np.intersect1d(a, b).size:
        raise ValueError("split must be two disjoint nonempty feature subsets")
    for part in (a, b):
        if np.all(np.ptp(S[:, part], axis=0) == 0) and np.all(np.ptp(R[:, part], axis=0) == 0):
            raise ValueError("degenerate feature subset: every column is constant")
    hits = _nearest(S[:, a], R[:, a]) == _nearest(S[:, b], R[:, b])
    return float(np.mean(hits))


def linkability(syn, real, split=None, seed=0, repeats=5):
    """Fraction of real records whose two feature fragments link to the same synthetic row.

    With ``split=None`` the score is the mean over ``repeats`` random equal splits.
    """
    if split is not None:
        return linkability_split(syn, real, split)
    d = syn.d if isinstance(syn, LabeledDataset) else np.asarray(syn).shape[1]
    rng = np.random.default_rng(seed)
    return float(np.mean([linkability_split(syn, real, random_split(d, rng))
                          for _ in range(repeats)]))


def naive_distinguish(aug, learner=LearnerConfig(), seed=0):
    """Train a classifier to tell real from synthetic minority rows.

    Minority rows are split 50/50 within each origin; the learner is trained on
    one half and precision/recall for the real class are measured on the
    other. No positive prediction gives precision 0.
    """
    if aug.origin is None:
        raise ValueError("naive_distinguish needs origin flags for training")
    rows = aug.minority_rows()
    origin = aug.origin[rows]
    rng = np.random.default_rng(seed)
    train, test = [], []
    for flag in (REAL, SYNTHETIC):
        ids = rng.permutation(rows[origin == flag])
        half = len(ids) // 2
        if half == 0 or len(ids) - half == 0:
            raise ValueError("each origin needs at least two minority rows")
        train.append(ids[:half])
        test.append(ids[half:])
    train, test = np.concatenate(train), np.concatenate(test)
    is_real = (aug.origin == REAL).astype(np.int8)
    model = train_learner(aug.features[train], is_real[train], learner.replace(seed=seed))
    predicted = model.predict(aug.features[test]) == 1
    actual = is_real[test] == 1
    tp = int(np.sum(predicted & actual))
    precision = tp / int(predicted.sum()) if predicted.any() else 0.0
    recall = tp / int(actual.sum())
    return precision, recall


def groundhog_features(ds):
    """Per-column min, mean, median and max, then upper-triangle correlations."""
    X = ds.features if isinstance(ds, LabeledDataset) else np.asarray(ds, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("groundhog_features needs at least two rows")
    d = X.shape[1]
    stats = [X.min(axis=0), X.mean(axis=0), np.median(X, axis=0), X.max(axis=0)]
    centered = X - X.mean(axis=0)
    norm = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    constant = np.ptp(X, axis=0) == 0
    safe = np.where(constant | (norm == 0), 1.0, norm)
    corr = (centered.T @ centered) / np.outer(safe, safe)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    iu = np.triu_indices(d, k=1)
    return np.concatenate(stats + [np.clip(corr[iu], -1.0, 1.0)])


MIA_MODES = ("synthetic-features", "augmented-classifier", "real-classifier")
MIN_WORLDS = 10


@dataclass(frozen=True)
class MiaConfig:
    """Membership game settings.

    ``target`` is ``"outlier"`` (the last minority row, where fixtures plant
    their outlier) or a row id of a minority record. Train worlds are only
    used by the synthetic-features mode.
    """

    target: object = "outlier"
    worlds_in: int = 100
    worlds_out: int = 100
    test_worlds: int = 50
    mode: str = "synthetic-features"
    smote_k: int = 5
    shuffle_labels: bool = False
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MIA_MODES:
            raise ValueError(f"mode must be one of {MIA_MODES}, got {self.mode!r}")
        for name in ("worlds_in", "worlds_out", "test_worlds"):
            check_count(getattr(self, name), name, minimum=MIN_WORLDS)


@dataclass
class MiaResult:
    auc: float
    scores: np.ndarray
    membership: np.ndarray
    target: int

    def to_dict(self):
        return {"auc": self.auc, "target": self.target,
                "scores": self.scores.tolist(), "membership": self.membership.tolist()}


def resolve_target(real, target):
    rows = real.minority_rows()
    if target == "outlier":
        return int(rows[-1])
    target = int(target)
    if target not in set(rows.tolist()):
        raise ValueError(f"target row {target} is not a minority record")
    return target


TRAIN, TEST = 0, 1


def _world(real, target, member, role, index, cfg):
    """One world: the real data with or without the target, plus SMOTE output."""
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(role, int(member), index))
    smote_seed, learner_seed = (int(s) for s in ss.generate_state(2))
    keep = np.ones(real.n, dtype=bool)
    if not member:
        keep[target] = False
    world = real.subset(np.flatnonzero(keep))
    if world.n1 <= cfg.smote_k:
        raise ValueError("too few minority rows for SMOTE in the world without the target")
    syn, _ = smote_oversample(world, SmoteConfig(cfg.smote_k, seed=smote_seed))
    return world, syn, learner_seed


def _world_signal(real, target, member, role, index, cfg):
    world, syn, learner_seed = _world(real, target, member, role, index, cfg)
    if cfg.mode == "synthetic-features":
        return groundhog_features(syn)
    train = augment(world, syn) if cfg.mode == "augmented-classifier" else world
    model = train_learner(train.features, train.labels, cfg.learner.replace(seed=learner_seed))
    return float(model.decision_function(real.features[target][None])[0])


def mia_game(real, cfg=MiaConfig()):
    """Membership inference AUC for one target over the test worlds.

    In synthetic-features mode a logistic meta-classifier is trained on the
    statistics of labeled train worlds and scores the test worlds. The
    classifier modes use the learner's score on the target, trained per test
    world on the augmented or the real data.
    """
    target = resolve_target(real, cfg.target)
    test_member = np.r_[np.ones(cfg.test_worlds, dtype=np.int8),
                        np.zeros(cfg.test_worlds, dtype=np.int8)]
    test_index = np.r_[np.arange(cfg.test_worlds), np.arange(cfg.test_worlds)]
    signals = [_world_signal(real, target, m, TEST, i, cfg) for m, i in zip(test_member, test_index)]

    if cfg.mode == "synthetic-features":
        train_member = np.r_[np.ones(cfg.worlds_in, dtype=np.int8),
                             np.zeros(cfg.worlds_out, dtype=np.int8)]
        train_index = np.r_[np.arange(cfg.worlds_in), np.arange(cfg.worlds_out)]
        F = np.array([_world_signal(real, target, m, TRAIN, i, cfg)
                      for m, i in zip(train_member, train_index)])
        if cfg.shuffle_labels:
            train_member = np.random.default_rng([cfg.seed, 1]).permutation(train_member)
        meta = train_learner(F, train_member, LearnerConfig(kind="linear-logistic"))
        scores = meta.decision_function(np.array(signals))
    else:
        scores = np.array(signals)
        if cfg.shuffle_labels:
            test_member = np.random.default_rng([cfg.seed, 1]).permutation(test_member)
    return MiaResult(auc(scores, test_member), np.asarray(scores), test_member, target)

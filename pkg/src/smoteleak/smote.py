"""Reference SMOTE with per-row provenance."""

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_binary_labels, check_count, check_features
from .data import REAL, SYNTHETIC, LabeledDataset
from .knn import NeighborIndex


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    target_synth_count: int = None  # None means n0 - n1
    seed: int = 0

    def __post_init__(self):
        check_count(self.k, "k", minimum=1)
        if self.target_synth_count is not None:
            check_count(self.target_synth_count, "target_synth_count")


@dataclass(frozen=True)
class SynthProvenance:
    """Per synthetic row: source row ``i``, neighbor row ``j`` and weight ``u``.

    Row ids index the real dataset that was oversampled.
    """

    source: np.ndarray
    neighbor: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return len(self.source)

    def write_csv(self, path):
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row", "i", "j", "u"])
            for row, (i, j, u) in enumerate(zip(self.source, self.neighbor, self.weight)):
                writer.writerow([row, int(i), int(j), repr(float(u))])
        return path

    @classmethod
    def read_csv(cls, path):
        with Path(path).open(newline="", encoding="utf-8") as fh:
            records = list(csv.DictReader(fh))
        return cls(
            np.array([int(r["i"]) for r in records], dtype=np.intp),
            np.array([int(r["j"]) for r in records], dtype=np.intp),
            np.array([float(r["u"]) for r in records]),
        )


def _open_unit(rng, size):
    """Uniform draws from the open interval (0, 1)."""
    u = rng.random(size)
    while True:
        zero = u == 0.0
        if not zero.any():
            return u
        u[zero] = rng.random(int(zero.sum()))


def minority_neighbors(X1, k):
    """k nearest minority neighbors of every minority point (self excluded)."""
    index = NeighborIndex(X1)
    return np.array([index.query(i, k, exclude_self=True) for i in range(len(X1))], dtype=np.intp)


def smote_oversample(ds, cfg=SmoteConfig()):
    """Generate synthetic minority rows by interpolation between KNN pairs.

    Each synthetic row picks a minority point uniformly, one of its ``k``
    nearest minority neighbors uniformly and a weight ``u`` in (0, 1).
    Returns the synthetic dataset (all minority, origin synthetic) and its
    provenance.
    """
    ds.check_imbalanced()
    rows = ds.minority_rows()
    n1 = len(rows)
    if n1 <= cfg.k:
        raise ValueError(f"SMOTE needs more than k={cfg.k} minority rows, got {n1}")
    count = ds.n0 - n1 if cfg.target_synth_count is None else cfg.target_synth_count
    count = max(count, 0)
    X1 = ds.features[rows]
    neighbors = minority_neighbors(X1, cfg.k)

    rng = np.random.default_rng(cfg.seed)
    pick = rng.integers(0, n1, size=count)
    choice = rng.integers(0, cfg.k, size=count)
    u = _open_unit(rng, count)
    partner = neighbors[pick, choice]
    Xi, Xj = X1[pick], X1[partner]
    synthetic = Xi + u[:, None] * (Xj - Xi)

    syn = LabeledDataset(
        synthetic.reshape(count, ds.d),
        np.ones(count, dtype=np.int8),
        np.full(count, SYNTHETIC, dtype=np.int8),
        ds.columns,
    )
    return syn, SynthProvenance(rows[pick], rows[partner], u)


def augment(ds, synth):
    """Real rows followed by synthetic rows, with origin flags."""
    if ds.d != synth.d:
        raise ValueError(f"dimension mismatch: {ds.d} vs {synth.d}")
    real_origin = ds.origin if ds.origin is not None else np.full(ds.n, REAL, dtype=np.int8)
    syn_origin = synth.origin if synth.origin is not None else np.full(synth.n, SYNTHETIC, dtype=np.int8)
    return LabeledDataset(
        np.vstack([ds.features, synth.features]),
        np.r_[ds.labels, synth.labels],
        np.r_[real_origin, syn_origin],
        ds.columns,
    )


def segment_usage_counts(prov):
    """Synthetic points per unordered segment ``(min(i, j), max(i, j))``."""
    return dict(Counter(
        (min(int(i), int(j)), max(int(i), int(j))) for i, j in zip(prov.source, prov.neighbor)
    ))


class SMOTE(BaseEstimator):
    """Synthetic minority oversampling, resampler-style.

    Parameters
    ----------
    k_neighbors : int, default=5
    n_synthetic : int or None, default=None
        Number of rows to synthesize; ``None`` balances the classes.
    random_state : int, default=0

    Attributes
    ----------
    provenance_ : SynthProvenance
        Source/neighbor rows (into the ``X`` given to ``fit_resample``) and
        weights of every synthetic row.
    n_synthetic_ : int
    """

    def __init__(self, k_neighbors=5, n_synthetic=None, random_state=0):
        self.k_neighbors = k_neighbors
        self.n_synthetic = n_synthetic
        self.random_state = random_state

    def fit_resample(self, X, y):
        """Return ``X`` and ``y`` with the synthetic minority rows appended."""
        X = check_features(X)
        y = check_binary_labels(y, X.shape[0])
        ds = LabeledDataset(X, y)
        cfg = SmoteConfig(self.k_neighbors, self.n_synthetic, self.random_state)
        syn, self.provenance_ = smote_oversample(ds, cfg)
        self.n_synthetic_ = syn.n
        self.n_features_in_ = X.shape[1]
        return np.vstack([X, syn.features]), np.r_[y, syn.labels]

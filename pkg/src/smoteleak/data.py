"""Labeled datasets, CSV I/O, standardization and synthetic fixtures."""

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_binary_labels, check_count, check_features
from .geometry import DEFAULT_GEOMETRY, find_collinear_triples

REAL = 0
SYNTHETIC = 1
_ORIGIN_NAMES = {REAL: "real", SYNTHETIC: "synthetic"}
_ORIGIN_CODES = {"real": REAL, "synthetic": SYNTHETIC}


@dataclass(frozen=True)
class DatasetStats:
    n: int
    d: int
    n0: int
    n1: int

    @property
    def r(self):
        return self.n0 / self.n1


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Continuous features with binary labels (1 = minority).

    ``origin`` optionally marks each row as real (0) or synthetic (1).
    Arrays are copied and made read-only on construction.
    """

    features: np.ndarray
    labels: np.ndarray
    origin: np.ndarray = None
    columns: tuple = None
    notes: tuple = field(default=())

    def __post_init__(self):
        X = check_features(self.features, min_samples=0)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        y = check_binary_labels(self.labels, X.shape[0])
        X = X.copy()
        X.flags.writeable = False
        y = y.copy()
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if self.origin is not None:
            origin = np.asarray(self.origin, dtype=np.int8).copy()
            if origin.shape != (X.shape[0],):
                raise ValueError(f"origin must have length {X.shape[0]}")
            if not np.all(np.isin(origin, (REAL, SYNTHETIC))):
                raise ValueError("origin flags must be 0 (real) or 1 (synthetic)")
            origin.flags.writeable = False
            object.__setattr__(self, "origin", origin)
        if self.columns is None:
            object.__setattr__(self, "columns", tuple(f"x{j}" for j in range(X.shape[1])))
        elif len(self.columns) != X.shape[1]:
            raise ValueError("columns must name every feature")
        else:
            object.__setattr__(self, "columns", tuple(self.columns))

    def __len__(self):
        return self.features.shape[0]

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def n1(self):
        return int(self.labels.sum())

    @property
    def n0(self):
        return self.n - self.n1

    def stats(self):
        return DatasetStats(n=self.n, d=self.d, n0=self.n0, n1=self.n1)

    def check_imbalanced(self):
        """Raise unless both classes are present."""
        if self.n1 < 1 or self.n0 < 1:
            raise ValueError(f"need both classes, got n0={self.n0}, n1={self.n1}")
        return self

    def minority_rows(self):
        return np.flatnonzero(self.labels == 1)

    def minority(self):
        return self.features[self.labels == 1]

    def subset(self, rows):
        rows = np.asarray(rows, dtype=np.intp)
        origin = None if self.origin is None else self.origin[rows]
        return LabeledDataset(self.features[rows], self.labels[rows], origin, self.columns)

    def without_origin(self):
        return LabeledDataset(self.features, self.labels, None, self.columns)

    def with_features(self, X):
        return LabeledDataset(X, self.labels, self.origin, self.columns, self.notes)


def _parse_cell(text, row, column):
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"non-numeric cell {text!r} at row {row}, column {column!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite cell {text!r} at row {row}, column {column!r}")
    return value


def load_csv(path, label_column, minority_label, origin_column="origin"):
    """Read a comma-separated file with a header row.

    Rows with ``label_column == minority_label`` get label 1, all others 0.
    A column named ``origin_column`` holding ``real``/``synthetic`` is read as
    provenance flags instead of a feature. Row numbers in error messages count
    data rows from 0.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path} is empty") from None
        if label_column not in header:
            raise ValueError(f"label column {label_column!r} not found in {path}")
        label_at = header.index(label_column)
        origin_at = header.index(origin_column) if origin_column in header else None
        feature_at = [j for j in range(len(header)) if j not in (label_at, origin_at)]
        rows, labels, origin = [], [], []
        for r, record in enumerate(reader):
            if not record:
                continue
            if len(record) != len(header):
                raise ValueError(f"row {r} has {len(record)} cells, expected {len(header)}")
            rows.append([_parse_cell(record[j], r, header[j]) for j in feature_at])
            labels.append(1 if record[label_at].strip() == str(minority_label) else 0)
            if origin_at is not None:
                flag = record[origin_at].strip().lower()
                if flag not in _ORIGIN_CODES:
                    raise ValueError(f"bad origin flag {flag!r} at row {r}")
                origin.append(_ORIGIN_CODES[flag])
    labels = np.array(labels, dtype=np.int8)
    if labels.sum() == 0:
        raise ValueError(f"minority label {minority_label!r} does not occur in {path}")
    X = np.array(rows, dtype=float).reshape(len(rows), len(feature_at))
    ds = LabeledDataset(X, labels, np.array(origin) if origin_at is not None else None,
                        tuple(header[j] for j in feature_at))
    dup = duplicate_groups(ds.features)
    if dup:
        message = f"{path}: {len(dup)} groups of duplicate rows"
        warnings.warn(message, stacklevel=2)
        ds = LabeledDataset(ds.features, ds.labels, ds.origin, ds.columns, (message,))
    return ds


def save_csv(ds, path, label_column="label"):
    """Write ``ds`` so that ``load_csv(path, label_column, "1")`` restores it."""
    path = Path(path)
    header = list(ds.columns) + [label_column]
    if ds.origin is not None:
        header.append("origin")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.features[i]] + [str(int(ds.labels[i]))]
            if ds.origin is not None:
                row.append(_ORIGIN_NAMES[int(ds.origin[i])])
            writer.writerow(row)
    return path


def duplicate_groups(X):
    """Groups (lists of row ids) of identical rows."""
    X = np.asarray(X)
    if len(X) == 0:
        return []
    _, inverse, counts = np.unique(X, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    return [np.flatnonzero(inverse == g).tolist() for g in np.flatnonzero(counts > 1)]


@dataclass(frozen=True)
class ScalingParams:
    shift: np.ndarray
    scale: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.shift) / self.scale

    def inverse(self, Z):
        return np.asarray(Z, dtype=float) * self.scale + self.shift


class Standardizer(TransformerMixin, BaseEstimator):
    """Zero-mean, unit-variance scaling with the population variance.

    Constant columns are shifted only (scale 1).

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    scale_ : ndarray of shape (n_features,)
    """

    def fit(self, X, y=None):
        X = check_features(X, min_samples=2)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        constant = np.ptp(X, axis=0) == 0
        self.scale_ = np.where(constant | (std == 0), 1.0, std)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        return (check_features(X, min_samples=0) - self.mean_) / self.scale_

    def inverse_transform(self, Z):
        check_is_fitted(self)
        return check_features(Z, min_samples=0) * self.scale_ + self.mean_

    @property
    def params_(self):
        check_is_fitted(self)
        return ScalingParams(self.mean_.copy(), self.scale_.copy())


def standardize(ds):
    """Standardize every feature column; returns the new dataset and its params."""
    if ds.n < 2:
        raise ValueError("standardize needs at least two rows")
    scaler = Standardizer().fit(ds.features)
    return ds.with_features(scaler.transform(ds.features)), scaler.params_


LAYOUTS = ("single-gaussian", "two-gaussian")


@dataclass(frozen=True)
class FixtureSpec:
    """Parameters for a Gaussian fixture that satisfies the attack assumptions."""

    n0: int
    n1: int
    d: int
    layout: str = "single-gaussian"
    planted_outlier: bool = False
    seed: int = 0

    def __post_init__(self):
        check_count(self.n1, "n1", minimum=4)
        check_count(self.d, "d", minimum=2)
        check_count(self.n0, "n0", minimum=self.n1 + 1)
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")

    @property
    def ratio(self):
        return self.n0 / self.n1


MINORITY_SHIFT = 2.0
CLUSTER_GAP = 6.0
OUTLIER_DISTANCE = 8.0
MAX_FIXTURE_RETRIES = 100


def _draw_fixture(spec, rng):
    X0 = rng.standard_normal((spec.n0, spec.d))
    center = np.zeros(spec.d)
    center[0] = MINORITY_SHIFT
    X1 = rng.standard_normal((spec.n1, spec.d)) + center
    if spec.layout == "two-gaussian":
        side = np.where(np.arange(spec.n1) % 2 == 0, -0.5, 0.5) * CLUSTER_GAP
        X1[:, 1] += side
    if spec.planted_outlier:
        v = rng.standard_normal(spec.d)
        X1[-1] = center + OUTLIER_DISTANCE * v / np.linalg.norm(v)
    return X0, X1


def make_fixture(spec, cfg=DEFAULT_GEOMETRY):
    """Deterministic Gaussian fixture whose minority class is in general position.

    Majority rows come first, then minority rows. Draws are repeated with
    derived sub-seeds until no minority triple is collinear at
    ``cfg.eps_col`` and no minority rows coincide.
    """
    for attempt in range(MAX_FIXTURE_RETRIES):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(attempt,)))
        X0, X1 = _draw_fixture(spec, rng)
        if duplicate_groups(X1):
            continue
        if find_collinear_triples(X1, cfg, limit=1):
            continue
        X = np.vstack([X0, X1])
        y = np.r_[np.zeros(spec.n0, dtype=np.int8), np.ones(spec.n1, dtype=np.int8)]
        return LabeledDataset(X, y, np.zeros(len(y), dtype=np.int8))
    raise RuntimeError(
        f"could not draw a fixture in general position after {MAX_FIXTURE_RETRIES} attempts"
    )

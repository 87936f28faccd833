"""Input validation helpers shared by the estimators and functional API."""

import numbers

import numpy as np
from sklearn.utils import check_array


def check_features(X, *, min_samples=1, name="X"):
    """Return ``X`` as a finite float64 matrix of shape (n_samples, n_features)."""
    X = check_array(
        X,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_min_samples=min_samples,
        input_name=name,
    )
    return X


def check_binary_labels(y, n_samples=None):
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {y.shape}")
    if n_samples is not None and y.shape[0] != n_samples:
        raise ValueError(f"labels have length {y.shape[0]}, expected {n_samples}")
    values = np.unique(y)
    if not np.all(np.isin(values, (0, 1))):
        raise ValueError(f"labels must be in {{0, 1}}, got values {values.tolist()}")
    return y.astype(np.int8)


def check_count(value, name, *, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_probability(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_attack_k(k):
    """Collinear-intersection attacks and bounds need at least three neighbors."""
    k = check_count(k, "k", minimum=1)
    if k < 3:
        raise ValueError(f"k must be >= 3 for the attacks and bounds, got {k}")
    return k

"""Small deterministic classifiers used by the baselines."""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.tree import DecisionTreeClassifier
from sklearn.utils.validation import check_is_fitted

from ._validation import check_binary_labels, check_count, check_features

LEARNER_KINDS = ("tree-ensemble", "linear-logistic")


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "tree-ensemble"
    trees: int = 50
    max_depth: int = 8
    features_per_split: str = "sqrt"  # "sqrt" or "all"
    learning_rate: float = 0.5
    epochs: int = 500
    l2: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValueError(f"kind must be one of {LEARNER_KINDS}, got {self.kind!r}")
        check_count(self.trees, "trees", minimum=1)
        check_count(self.max_depth, "max_depth", minimum=1)
        check_count(self.epochs, "epochs", minimum=1)
        if self.features_per_split not in ("sqrt", "all"):
            raise ValueError("features_per_split must be 'sqrt' or 'all'")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def replace(self, **changes):
        values = {**self.__dict__, **changes}
        return LearnerConfig(**values)


def _check_training(X, y):
    X = check_features(X)
    y = check_binary_labels(y, X.shape[0])
    if len(np.unique(y)) < 2:
        raise ValueError("training labels contain a single class")
    return X, y


class TreeEnsembleClassifier(ClassifierMixin, BaseEstimator):
    """Bagged depth-limited Gini trees; the score is the positive vote fraction.

    Parameters
    ----------
    n_trees : int, default=50
    max_depth : int, default=8
    features_per_split : {"sqrt", "all"}, default="sqrt"
    random_state : int, default=0
    """

    def __init__(self, n_trees=50, max_depth=8, features_per_split="sqrt", random_state=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.features_per_split = features_per_split
        self.random_state = random_state

    def fit(self, X, y):
        X, y = _check_training(X, y)
        n, d = X.shape
        per_split = math.ceil(math.sqrt(d)) if self.features_per_split == "sqrt" else d
        seeds = np.random.SeedSequence(self.random_state).generate_state(2 * self.n_trees)
        self.trees_ = []
        for t in range(self.n_trees):
            rows = np.random.default_rng(seeds[2 * t]).integers(0, n, size=n)
            tree = DecisionTreeClassifier(
                criterion="gini",
                max_depth=self.max_depth,
                max_features=per_split,
                random_state=int(seeds[2 * t + 1] % (2**31 - 1)),
            )
            # a single-class bootstrap sample still yields a valid constant tree
            tree.fit(X[rows], y[rows])
            self.trees_.append(tree)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = d
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = check_features(X)
        votes = np.zeros(X.shape[0])
        for tree in self.trees_:
            if tree.classes_.shape[0] == 1:
                votes += float(tree.classes_[0] == 1)
            else:
                votes += tree.predict(X) == 1
        return votes / len(self.trees_)

    def predict_proba(self, X):
        p = self.decision_function(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) > 0.5).astype(np.int8)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticClassifier(ClassifierMixin, BaseEstimator):
    """L2-regularized logistic regression fit by full-batch gradient descent
    on standardized features."""

    def __init__(self, learning_rate=0.5, epochs=500, l2=1e-3):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2

    def fit(self, X, y):
        X, y = _check_training(X, y)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        Z = (X - self.mean_) / self.scale_
        n, d = Z.shape
        w = np.zeros(d)
        b = 0.0
        target = y.astype(float)
        for _ in range(self.epochs):
            residual = _sigmoid(Z @ w + b) - target
            w -= self.learning_rate * (Z.T @ residual / n + self.l2 * w)
            b -= self.learning_rate * residual.mean()
        self.coef_ = w
        self.intercept_ = b
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = d
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        Z = (check_features(X) - self.mean_) / self.scale_
        return _sigmoid(Z @ self.coef_ + self.intercept_)

    def predict_proba(self, X):
        p = self.decision_function(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) > 0.5).astype(np.int8)


def make_learner(cfg):
    if cfg.kind == "tree-ensemble":
        return TreeEnsembleClassifier(cfg.trees, cfg.max_depth, cfg.features_per_split, cfg.seed)
    return LogisticClassifier(cfg.learning_rate, cfg.epochs, cfg.l2)


def train_learner(features, labels, cfg=LearnerConfig()):
    """Fit the configured learner; the returned object's ``decision_function``
    gives the positive-class score in [0, 1]."""
    return make_learner(cfg).fit(features, labels)

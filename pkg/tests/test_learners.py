import numpy as np
import pytest

from smoteleak.learners import (
    LearnerConfig,
    LogisticClassifier,
    TreeEnsembleClassifier,
    make_learner,
    train_learner,
)


def separable(rng, n=200, d=3):
    X = rng.standard_normal((n, d))
    y = (np.arange(n) % 2).astype(int)
    X[y == 1, 0] += 6.0
    return X, y


@pytest.mark.parametrize("kind", ["tree-ensemble", "linear-logistic"])
def test_learners_separate_a_wide_gap(kind, rng):
    X, y = separable(rng)
    Xt, yt = separable(rng)
    model = train_learner(X, y, LearnerConfig(kind=kind, trees=20))
    assert np.mean(model.predict(Xt) == yt) >= 0.95
    scores = model.decision_function(Xt)
    assert np.all((scores >= 0) & (scores <= 1))
    proba = model.predict_proba(Xt)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)


@pytest.mark.parametrize("kind", ["tree-ensemble", "linear-logistic"])
def test_learners_reject_single_class(kind):
    with pytest.raises(ValueError):
        train_learner(np.zeros((5, 2)), np.ones(5), LearnerConfig(kind=kind))


def test_tree_ensemble_is_seeded(rng):
    X, y = separable(rng, n=80)
    X += rng.standard_normal(X.shape) * 3
    a = TreeEnsembleClassifier(n_trees=15, random_state=4).fit(X, y).decision_function(X)
    b = TreeEnsembleClassifier(n_trees=15, random_state=4).fit(X, y).decision_function(X)
    np.testing.assert_array_equal(a, b)


def test_logistic_handles_constant_columns(rng):
    X, y = separable(rng, n=60)
    X = np.c_[X, np.full(60, 3.0)]
    model = LogisticClassifier().fit(X, y)
    assert np.all(np.isfinite(model.decision_function(X)))


def test_config_validation_and_factory():
    with pytest.raises(ValueError):
        LearnerConfig(kind="svm")
    with pytest.raises(ValueError):
        LearnerConfig(trees=0)
    assert isinstance(make_learner(LearnerConfig(kind="linear-logistic")), LogisticClassifier)
    assert LearnerConfig().replace(seed=3).seed == 3

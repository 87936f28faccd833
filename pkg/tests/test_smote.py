import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoteleak.data import REAL, SYNTHETIC, FixtureSpec, LabeledDataset, make_fixture
from smoteleak.knn import build_knn_graph
from smoteleak.smote import (
    SMOTE,
    SmoteConfig,
    SynthProvenance,
    augment,
    segment_usage_counts,
    smote_oversample,
)


def check_contract(real, syn, prov, k):
    rows = real.minority_rows()
    assert syn.n == real.n0 - real.n1 == len(prov)
    assert np.all(syn.labels == 1) and np.all(syn.origin == SYNTHETIC)
    assert np.all((prov.weight > 0) & (prov.weight < 1))
    g = build_knn_graph(real.minority(), k)
    pos = {int(r): i for i, r in enumerate(rows)}
    for i, j in zip(prov.source, prov.neighbor):
        assert pos[int(j)] in g.neighbors[pos[int(i)]]
    Xi, Xj = real.features[prov.source], real.features[prov.neighbor]
    expected = Xi + prov.weight[:, None] * (Xj - Xi)
    scale = np.maximum(np.abs(Xi), np.abs(Xj)).max(axis=1, keepdims=True)
    assert np.all(np.abs(syn.features - expected) <= 1e-12 * np.maximum(scale, 1.0))


@settings(max_examples=15, deadline=None)
@given(st.integers(6, 30), st.integers(2, 6), st.integers(2, 8), st.integers(1, 5), st.integers(0, 10**6))
def test_smote_contract(n1, d, r, k, seed):
    k = min(k, n1 - 1)
    real = make_fixture(FixtureSpec(n0=n1 * r, n1=n1, d=d, seed=seed))
    syn, prov = smote_oversample(real, SmoteConfig(k=k, seed=seed))
    check_contract(real, syn, prov, k)


def test_smote_is_deterministic_and_seed_sensitive(small_world):
    real = small_world[0]
    a, pa = smote_oversample(real, SmoteConfig(seed=3))
    b, pb = smote_oversample(real, SmoteConfig(seed=3))
    c, _ = smote_oversample(real, SmoteConfig(seed=4))
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(pa.weight, pb.weight)
    assert not np.array_equal(a.features, c.features)


def test_explicit_count_and_errors(small_world):
    real = small_world[0]
    syn, prov = smote_oversample(real, SmoteConfig(k=3, target_synth_count=7))
    assert syn.n == len(prov) == 7
    empty, p0 = smote_oversample(real, SmoteConfig(target_synth_count=0))
    assert empty.n == 0 and len(p0) == 0
    with pytest.raises(ValueError, match="more than k"):
        smote_oversample(real, SmoteConfig(k=20))
    with pytest.raises(ValueError):
        smote_oversample(LabeledDataset(np.zeros((3, 2)), [1, 1, 1]))


def test_provenance_csv_round_trip(tmp_path, small_world):
    prov = small_world[2]
    back = SynthProvenance.read_csv(prov.write_csv(tmp_path / "p.csv"))
    np.testing.assert_array_equal(back.source, prov.source)
    np.testing.assert_array_equal(back.neighbor, prov.neighbor)
    np.testing.assert_array_equal(back.weight, prov.weight)
    header = (tmp_path / "p.csv").read_text().splitlines()[0]
    assert header == "row,i,j,u"


def test_augment_marks_origin(small_world):
    real, syn, _, aug = small_world
    assert aug.n == real.n + syn.n
    assert np.all(aug.origin[: real.n] == REAL) and np.all(aug.origin[real.n:] == SYNTHETIC)
    assert aug.n1 == aug.n0  # balanced after oversampling


def test_segment_usage_counts_sum(small_world):
    prov = small_world[2]
    counts = segment_usage_counts(prov)
    assert sum(counts.values()) == len(prov)
    assert all(a < b for a, b in counts)


def test_resampler_estimator():
    X = np.r_[np.random.default_rng(0).standard_normal((50, 3)),
              np.random.default_rng(1).standard_normal((10, 3)) + 3]
    y = np.r_[np.zeros(50), np.ones(10)]
    sm = SMOTE(k_neighbors=3, random_state=2)
    Xr, yr = sm.fit_resample(X, y)
    assert Xr.shape == (100, 3) and yr.sum() == 50
    assert sm.n_synthetic_ == 40 and sm.get_params()["k_neighbors"] == 3
    np.testing.assert_array_equal(Xr[:60], X)
    i, j, u = sm.provenance_.source[0], sm.provenance_.neighbor[0], sm.provenance_.weight[0]
    np.testing.assert_allclose(Xr[60], X[i] + u * (X[j] - X[i]))

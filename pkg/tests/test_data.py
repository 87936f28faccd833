import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smoteleak.data import (
    OUTLIER_DISTANCE,
    REAL,
    SYNTHETIC,
    FixtureSpec,
    LabeledDataset,
    Standardizer,
    duplicate_groups,
    load_csv,
    make_fixture,
    save_csv,
    standardize,
)
from smoteleak.geometry import find_collinear_triples


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_maps_minority_label(tmp_path):
    path = write(tmp_path / "d.csv", "a,b,cls\n1.5,2,yes\n3,4,no\n5,6.25,yes\n")
    ds = load_csv(path, "cls", "yes")
    assert ds.columns == ("a", "b")
    assert ds.labels.tolist() == [1, 0, 1]
    np.testing.assert_array_equal(ds.features, [[1.5, 2], [3, 4], [5, 6.25]])
    assert ds.origin is None
    assert (ds.n0, ds.n1, ds.d) == (1, 2, 2)


def test_load_csv_reads_origin_column(tmp_path):
    path = write(tmp_path / "d.csv", "x,y,label,origin\n0,0,1,real\n1,1,1,synthetic\n2,0,0,real\n")
    ds = load_csv(path, "label", "1")
    assert ds.origin.tolist() == [REAL, SYNTHETIC, REAL]
    assert ds.d == 2


def test_save_load_round_trip_is_exact(tmp_path, rng):
    X = rng.standard_normal((30, 3)) * 1e3
    y = (np.arange(30) % 4 == 0).astype(int)
    ds = LabeledDataset(X, y, np.where(np.arange(30) > 20, SYNTHETIC, REAL))
    back = load_csv(save_csv(ds, tmp_path / "o.csv"), "label", "1")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.origin, ds.origin)


@pytest.mark.parametrize("body, needle", [
    ("a,label\nfoo,1\n", "row 0, column 'a'"),
    ("a,label\n1,1\nnan,0\n", "non-finite cell 'nan' at row 1"),
    ("a,label\n1,1\ninf,0\n", "non-finite"),
])
def test_load_csv_reports_bad_cells(tmp_path, body, needle):
    path = write(tmp_path / "bad.csv", body)
    with pytest.raises(ValueError, match=needle):
        load_csv(path, "label", "1")


def test_load_csv_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "missing.csv", "label", "1")
    path = write(tmp_path / "d.csv", "a,label\n1,0\n2,0\n")
    with pytest.raises(ValueError, match="label column"):
        load_csv(path, "class", "1")
    with pytest.raises(ValueError, match="does not occur"):
        load_csv(path, "label", "1")


def test_duplicates_warn_and_are_noted(tmp_path):
    path = write(tmp_path / "d.csv", "a,b,label\n1,2,1\n1,2,1\n3,4,0\n")
    with pytest.warns(UserWarning, match="duplicate"):
        ds = load_csv(path, "label", "1")
    assert ds.notes and "duplicate" in ds.notes[0]
    assert duplicate_groups(ds.features) == [[0, 1]]


def test_dataset_arrays_are_read_only():
    ds = LabeledDataset(np.zeros((3, 2)), [0, 1, 0])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((3, 2)), [0, 2, 0])
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((3, 2)), [0, 1, 0], origin=[0, 1, 5])


def test_stats_and_imbalance_check():
    ds = LabeledDataset(np.arange(10.0).reshape(5, 2), [0, 0, 0, 1, 1])
    assert ds.stats().r == 1.5
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), [1, 1]).check_imbalanced()


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 4)), elements=finite))
def test_standardizer_inverse_round_trip(X):
    scaler = Standardizer().fit(X)
    Z = scaler.transform(X)
    back = scaler.inverse_transform(Z)
    np.testing.assert_allclose(back, X, rtol=1e-9, atol=1e-6)
    assert np.all(scaler.scale_ > 0)


def test_standardizer_constant_column_has_unit_scale():
    X = np.column_stack([np.full(5, 3.0), np.arange(5.0)])
    scaler = Standardizer().fit(X)
    assert scaler.scale_[0] == 1.0
    np.testing.assert_array_equal(scaler.transform(X)[:, 0], 0.0)
    Z = scaler.transform(X)[:, 1]
    assert abs(Z.mean()) < 1e-12 and abs(Z.std() - 1) < 1e-12


def test_standardize_dataset():
    ds = LabeledDataset(np.arange(8.0).reshape(4, 2), [0, 1, 0, 1])
    out, params = standardize(ds)
    np.testing.assert_allclose(params.inverse(out.features), ds.features)


def test_fixture_is_deterministic_and_in_general_position():
    spec = FixtureSpec(n0=300, n1=30, d=3, seed=4)
    a, b = make_fixture(spec), make_fixture(spec)
    np.testing.assert_array_equal(a.features, b.features)
    assert a.n0 == 300 and a.n1 == 30
    assert np.all(a.origin == REAL)
    assert a.labels[:300].sum() == 0 and a.labels[300:].all()
    assert not duplicate_groups(a.minority())
    assert find_collinear_triples(a.minority()) == []


def test_fixture_outlier_and_layouts():
    ds = make_fixture(FixtureSpec(n0=100, n1=10, d=5, planted_outlier=True, seed=1))
    center = np.zeros(5)
    center[0] = 2.0
    assert np.isclose(np.linalg.norm(ds.minority()[-1] - center), OUTLIER_DISTANCE)
    two = make_fixture(FixtureSpec(n0=400, n1=40, d=3, layout="two-gaussian", seed=1))
    x1 = two.minority()[:, 1]
    assert x1[::2].mean() < -1.5 and x1[1::2].mean() > 1.5


@pytest.mark.parametrize("kwargs", [
    dict(n0=10, n1=3, d=2), dict(n0=10, n1=5, d=1), dict(n0=5, n1=5, d=2),
    dict(n0=10, n1=5, d=2, layout="ring"),
])
def test_fixture_spec_validation(kwargs):
    with pytest.raises(ValueError):
        FixtureSpec(**kwargs)

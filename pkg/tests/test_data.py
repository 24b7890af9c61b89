import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from jplay.data import (
    Dataset,
    bundled,
    from_bytes,
    load,
    load_csv,
    load_labels,
    normalize,
    random_split,
    save_binary,
    save_csv,
    synth_blobs,
    to_bytes,
    two_blobs,
)
from jplay.errors import FormatError, InputError, ParseError


def test_csv_rows_are_samples(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2\n3,4\n")
    ds = load_csv(p)
    np.testing.assert_array_equal(ds.X, [[1, 3], [2, 4]])
    assert ds.labels is None


def test_csv_columns_orientation(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(load_csv(p, orientation="columns").X, [[1, 2], [3, 4]])


def test_csv_named_label_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("f1,f2,cls\n0.5,1.5,1\n2.5,3.5,2\n4,5,2\n")
    ds = load_csv(p, label_column="cls")
    assert ds.n_classes == 2
    np.testing.assert_array_equal(ds.labels, [1, 2, 2])
    assert ds.X.shape == (2, 3)


def test_csv_parse_error_reports_line(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2\n3,x\n")
    with pytest.raises(ParseError) as info:
        load_csv(p)
    assert info.value.line == 2
    p.write_text("1,2\n3\n")
    with pytest.raises(ParseError) as info:
        load_csv(p)
    assert info.value.line == 2


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ds = Dataset(rng.normal(size=(3, 5)), np.array([1, 2, 1, 3, 2]))
    for orient in ("rows", "columns"):
        p = tmp_path / f"{orient}.csv"
        save_csv(ds, p, orientation=orient)
        col = -1 if orient == "rows" else 3
        back = load_csv(p, orientation=orient, label_column=col)
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.labels, ds.labels)


def test_labels_file(tmp_path):
    p = tmp_path / "y.txt"
    p.write_text("1\n2\n\n3\n")
    np.testing.assert_array_equal(load_labels(p), [1, 2, 3])
    p.write_text("1\nfoo\n")
    with pytest.raises(ParseError):
        load_labels(p)


def test_binary_size_arithmetic():
    assert len(to_bytes(Dataset(np.zeros((1, 1))))) == 33


def test_binary_unlabeled_round_trip(tmp_path):
    ds = Dataset(np.arange(6.0).reshape(2, 3))
    p = tmp_path / "x.jpld"
    save_binary(ds, p)
    back = load(p)
    assert back.labels is None
    assert p.read_bytes() == to_bytes(back)


@settings(max_examples=50, deadline=None)
@given(X=arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 6)),
                elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_binary_round_trip_exact(X):
    labels = np.arange(1, X.shape[1] + 1)
    back = from_bytes(to_bytes(Dataset(X, labels)))
    assert back.X.tobytes() == np.asarray(X, dtype=float).tobytes()
    assert np.array_equal(back.labels, labels)


def test_binary_format_errors():
    good = to_bytes(Dataset(np.ones((2, 2)), np.array([1, 2])))
    with pytest.raises(FormatError) as info:
        from_bytes(b"XXXX" + good[4:])
    assert info.value.offset == 0
    with pytest.raises(FormatError):
        from_bytes(good[:-1])
    with pytest.raises(FormatError):
        from_bytes(good + b"\0")
    with pytest.raises(FormatError):
        from_bytes(good[:10])
    bad = bytearray(good)
    bad[21:29] = np.array([np.nan]).tobytes()
    with pytest.raises(FormatError) as info:
        from_bytes(bytes(bad))
    assert info.value.offset == 21


def test_normalize_unit_columns():
    X = np.array([[2.0, 1.0], [0.0, 0.0]])
    Xn, params = normalize(X, "unit-columns")
    np.testing.assert_allclose(Xn, X / 2)
    assert np.linalg.norm(Xn, axis=0).max() == 1.0
    np.testing.assert_allclose(params.apply(X), Xn)


def test_normalize_zscore_population():
    Xn, _ = normalize(np.array([[0.0, 2.0]]), "zscore-features")
    np.testing.assert_array_equal(Xn, [[-1.0, 1.0]])


def test_normalize_minmax():
    Xn, _ = normalize(np.array([[3.0, 5.0, 7.0]]), "minmax-features")
    np.testing.assert_array_equal(Xn, [[0.0, 0.5, 1.0]])


def test_normalize_constant_feature_warns():
    with pytest.warns(RuntimeWarning):
        Xn, params = normalize(np.array([[1.0, 1.0], [0.0, 2.0]]), "zscore-features")
    np.testing.assert_array_equal(Xn[0], [0, 0])
    assert params.degenerate.tolist() == [True, False]


def test_normalize_unknown_mode():
    with pytest.raises(InputError):
        normalize(np.ones((2, 2)), "l2")


def test_synth_noise_free_and_seeded():
    ds = synth_blobs(3, 4, 5, noise_sigma=0.0, seed=1)
    for c in range(1, 4):
        cols = ds.X[:, ds.labels == c]
        assert np.all(cols == cols[:, :1])
    a, b = synth_blobs(3, 4, 5, seed=9), synth_blobs(3, 4, 5, seed=9)
    assert a.X.tobytes() == b.X.tobytes()


def test_two_blobs_geometry():
    ds = two_blobs(noise_sigma=0.0)
    gap = np.linalg.norm(ds.X[:, 0] - ds.X[:, -1])
    assert gap == pytest.approx(10.0)
    assert ds.X.shape == (10, 100)


def test_bundled_fixtures():
    ds = bundled("four-class")
    assert (ds.d, ds.n, ds.n_classes) == (30, 400, 4)
    assert ds.train_idx.size == ds.test_idx.size == 200
    assert np.intersect1d(ds.train_idx, ds.test_idx).size == 0
    with pytest.raises(InputError):
        bundled("nope")


def test_random_split_stratified():
    labels = np.repeat([1, 2], [10, 6])
    tr, te = random_split(labels, 0.5, 0)
    assert np.bincount(labels[tr]).tolist() == [0, 5, 3]
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(16))


def test_dataset_validation():
    with pytest.raises(InputError):
        Dataset(np.array([[np.inf]]))
    with pytest.raises(InputError):
        Dataset(np.ones((2, 3)), np.array([1, 2]))


def test_binary_double_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    ds = Dataset(rng.normal(size=(7, 13)), rng.integers(1, 4, 13))
    a, b = tmp_path / "a.jpld", tmp_path / "b.jpld"
    save_binary(ds, a)
    save_binary(load(a), b)
    assert a.read_bytes() == b.read_bytes()

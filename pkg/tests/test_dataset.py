"""Dataset container, distances, scaling, CSV and IDX loaders."""
from __future__ import annotations

import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import touristnet as tn
from touristnet.dataset import (
    CATEGORICAL,
    NUMERIC,
    DatasetError,
    distances_to,
    numeric_mask,
    pairwise_distances,
    rank_by_distance,
    write_csv,
)


def test_labeled_dataset_basics(two_blob_ds):
    ds = two_blob_ds
    assert ds.n_instances == 6
    assert ds.dim == 2
    assert ds.class_count == 2
    assert ds.class_sizes().tolist() == [3, 3]
    assert ds.class_indices(1).tolist() == [3, 4, 5]
    sub = ds.subset(np.array([0, 3]))
    assert sub.n_instances == 2
    assert sub.labels.tolist() == [0, 1]
    assert sub.label_names == ds.label_names


def test_labeled_dataset_validation():
    with pytest.raises(ValueError):
        tn.LabeledDataset(
            features=np.zeros((2, 2)),
            labels=np.array([0]),  # length mismatch
            kinds=(NUMERIC, NUMERIC),
            label_names=("a",),
        )
    with pytest.raises(ValueError):
        tn.LabeledDataset(
            features=np.zeros((2, 2)),
            labels=np.array([0, 5]),  # code out of range
            kinds=(NUMERIC, NUMERIC),
            label_names=("a", "b"),
        )


def test_distance_mixed_kinds_hand_values():
    kinds = (NUMERIC, CATEGORICAL, NUMERIC)
    a = np.array([0.0, 2.0, 1.0])
    b = np.array([3.0, 5.0, 1.0])
    # sqrt(3^2 + 1 mismatch + 0^2)
    assert tn.distance(a, b, kinds) == pytest.approx(np.sqrt(10.0), abs=0)
    same_cat = np.array([3.0, 2.0, 1.0])
    assert tn.distance(a, same_cat, kinds) == pytest.approx(3.0, abs=0)


def test_distance_matches_vectorized_bitwise():
    rng = np.random.default_rng(3)
    kinds = (NUMERIC, CATEGORICAL, NUMERIC, CATEGORICAL)
    X = np.round(rng.uniform(-2, 2, size=(40, 4)), 2)
    X[:, 1] = rng.integers(0, 3, size=40)
    X[:, 3] = rng.integers(0, 2, size=40)
    x = X[7]
    vec = distances_to(X, x, kinds)
    for i in range(40):
        assert tn.distance(X[i], x, kinds) == vec[i]  # bitwise, not approx


def test_pairwise_symmetry_and_diagonal():
    rng = np.random.default_rng(11)
    kinds = (NUMERIC, NUMERIC, CATEGORICAL)
    X = rng.normal(size=(25, 3))
    X[:, 2] = rng.integers(0, 4, size=25)
    D = pairwise_distances(X, kinds)
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0.0)
    assert np.all(D >= 0.0)


@given(st.integers(2, 30), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_pairwise_rows_match_distances_to(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    kinds = (NUMERIC,) * 3
    D = pairwise_distances(X, kinds)
    i = int(rng.integers(0, n))
    assert np.array_equal(D[i], distances_to(X, X[i], kinds))


def test_rank_by_distance_ties_and_exclude():
    dists = np.array([2.0, 1.0, 1.0, 0.0])
    assert rank_by_distance(dists).tolist() == [3, 1, 2, 0]
    assert rank_by_distance(dists, exclude=3).tolist() == [1, 2, 0]
    assert rank_by_distance(dists, exclude=1).tolist() == [3, 2, 0]


def test_numeric_mask():
    assert numeric_mask((NUMERIC, CATEGORICAL, NUMERIC)).tolist() == [True, False, True]


def test_standardizer_zscores_numeric_only():
    ds = tn.LabeledDataset(
        features=np.array([[1.0, 7.0, 0.0], [3.0, 7.0, 1.0], [5.0, 7.0, 0.0]]),
        labels=np.array([0, 1, 0]),
        kinds=(NUMERIC, NUMERIC, CATEGORICAL),
        label_names=("a", "b"),
    )
    out = tn.standardize(ds)
    col = out.features[:, 0]
    assert col.mean() == pytest.approx(0.0, abs=1e-15)
    assert col.std() == pytest.approx(1.0, abs=1e-12)
    # constant numeric column maps to zeros instead of dividing by zero
    assert np.all(out.features[:, 1] == 0.0)
    # categorical column passes through untouched
    assert np.array_equal(out.features[:, 2], ds.features[:, 2])
    assert out.standardized


def test_standardizer_transform_row_matches_matrix(two_blob_ds):
    sc = tn.Standardizer.fit(two_blob_ds)
    M = sc.transform_matrix(two_blob_ds.features)
    for i, row in enumerate(two_blob_ds.features):
        assert np.array_equal(sc.transform_row(row), M[i])


def test_csv_round_trip_exact(tmp_path, two_blob_ds):
    path = tmp_path / "blobs.csv"
    write_csv(two_blob_ds, path)
    back = tn.load_csv(path)
    assert np.array_equal(back.features, two_blob_ds.features)
    assert np.array_equal(back.labels, two_blob_ds.labels)
    assert back.label_names == two_blob_ds.label_names
    assert back.kinds == two_blob_ds.kinds


def test_load_csv_label_column_and_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("label,f0,f1\nyes,1.0,2.0\nno,3.0,4.0\n")
    ds = tn.load_csv(path, label_column=0, has_header=True)
    assert ds.label_names == ("no", "yes")
    assert ds.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert ds.labels.tolist() == [1, 0]


def test_load_csv_categorical_kinds(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("1.0,red,a\n2.0,blue,a\n3.0,red,b\n")
    ds = tn.load_csv(path, kinds=(NUMERIC, CATEGORICAL))
    assert ds.kinds == (NUMERIC, CATEGORICAL)
    # categories are coded alphabetically, stable across loads
    assert ds.categories[1] == ("blue", "red")
    assert ds.features[:, 1].tolist() == [1.0, 0.0, 1.0]


def test_load_csv_errors_name_rows_and_columns(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1.0,2.0,a\n1.0,b\n")
    with pytest.raises(DatasetError, match="row 2"):
        tn.load_csv(ragged)
    bad_num = tmp_path / "badnum.csv"
    bad_num.write_text("1.0,2.0,a\nx,3.0,b\n")
    with pytest.raises(DatasetError, match="column 1"):
        tn.load_csv(bad_num, kinds=(NUMERIC, NUMERIC))
    missing = tmp_path / "missing.csv"
    with pytest.raises(DatasetError):
        tn.load_csv(missing)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DatasetError):
        tn.load_csv(empty)
    with pytest.raises(DatasetError, match="label column"):
        bad = tmp_path / "col.csv"
        bad.write_text("1.0,a\n")
        tn.load_csv(bad, label_column=5)


def _write_idx_pair(tmp_path, images, labels, compress=False):
    n, r, c = images.shape
    img_bytes = struct.pack(">IIII", 2051, n, r, c) + images.tobytes()
    lab_bytes = struct.pack(">II", 2049, len(labels)) + labels.tobytes()
    opener = gzip.open if compress else open
    suffix = ".gz" if compress else ""
    ip = tmp_path / f"img{suffix}"
    lp = tmp_path / f"lab{suffix}"
    with opener(ip, "wb") as f:
        f.write(img_bytes)
    with opener(lp, "wb") as f:
        f.write(lab_bytes)
    return ip, lp


@pytest.mark.parametrize("compress", [False, True])
def test_load_idx_hand_built(tmp_path, compress):
    images = np.array(
        [[[0, 255], [128, 0]], [[255, 255], [0, 0]]], dtype=np.uint8
    )
    labels = np.array([3, 1], dtype=np.uint8)
    ip, lp = _write_idx_pair(tmp_path, images, labels, compress)
    ds = tn.load_idx(ip, lp)
    assert ds.features.shape == (2, 4)
    assert ds.features[0].tolist() == [0.0, 1.0, 128.0 / 255.0, 0.0]
    assert ds.label_names == ("1", "3")
    assert ds.labels.tolist() == [1, 0]  # codes follow sorted names


def test_load_idx_error_paths(tmp_path):
    images = np.zeros((2, 2, 2), dtype=np.uint8)
    labels = np.zeros(3, dtype=np.uint8)
    ip, lp = _write_idx_pair(tmp_path, images, labels)
    with pytest.raises(DatasetError, match="2 images but .* 3 labels"):
        tn.load_idx(ip, lp)
    bad = tmp_path / "bad"
    bad.write_bytes(struct.pack(">IIII", 1234, 1, 2, 2) + b"\x00" * 4)
    with pytest.raises(DatasetError, match="magic"):
        tn.load_idx(bad, lp)


def test_fixture_files_load(iris_path, wine_path, digits_paths):
    iris = tn.load_csv(iris_path)
    assert iris.class_sizes().tolist() == [50, 50, 50]
    wine = tn.load_csv(wine_path)
    assert sorted(wine.class_sizes().tolist()) == [48, 59, 71]
    digs = tn.load_idx(*digits_paths)
    assert digs.features.shape == (1797, 64)
    assert digs.class_count == 10

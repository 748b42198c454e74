"""Labeled datasets with typed columns, plus the distance used everywhere else.

Feature matrices are float64 throughout.  Categorical columns are stored as
integer codes into per-column token tables so that a single ndarray can hold
mixed rows; the distance function is the only place the column kind matters.
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

_IDX_IMAGES_MAGIC = 2051
_IDX_LABELS_MAGIC = 2049


class DatasetError(ValueError):
    """Malformed input data or an inconsistent dataset operation."""


@dataclass(frozen=True)
class LabeledDataset:
    """Immutable feature matrix with integer class labels.

    Attributes
    ----------
    features : ndarray, shape (n, d), float64
        Row-per-instance matrix.  Categorical columns hold token codes.
    labels : ndarray, shape (n,), int64
        Codes into ``label_names``.
    kinds : tuple of str
        Per-column ``NUMERIC`` or ``CATEGORICAL``.
    label_names : tuple of str
        Sorted class identifiers; label ``i`` means ``label_names[i]``.
    categories : tuple
        Per-column token table (tuple of str) for categorical columns,
        ``None`` for numeric ones.
    standardized : bool
        Set once numeric columns have been z-scored.
    """

    features: np.ndarray
    labels: np.ndarray
    kinds: tuple[str, ...]
    label_names: tuple[str, ...]
    categories: tuple[tuple[str, ...] | None, ...] = ()
    standardized: bool = False

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        if feats.ndim != 2:
            raise DatasetError(f"feature matrix must be 2-D, got shape {feats.shape}")
        n, d = feats.shape
        if d < 1:
            raise DatasetError("datasets need at least one feature column")
        if labels.shape != (n,):
            raise DatasetError(f"labels shape {labels.shape} does not match {n} rows")
        if len(self.kinds) != d:
            raise DatasetError(f"got {len(self.kinds)} column kinds for {d} columns")
        for k in self.kinds:
            if k not in (NUMERIC, CATEGORICAL):
                raise DatasetError(f"unknown column kind {k!r}")
        if not self.categories:
            object.__setattr__(
                self,
                "categories",
                tuple(None if k == NUMERIC else () for k in self.kinds),
            )
        if len(self.categories) != d:
            raise DatasetError("categories must have one entry per column")
        if n and (labels.min() < 0 or labels.max() >= len(self.label_names)):
            raise DatasetError("label code out of range")

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.label_names)

    def class_sizes(self) -> np.ndarray:
        """Instance count per class code, length ``class_count``."""
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, index) -> LabeledDataset:
        """New dataset restricted to the given row selector (same label universe)."""
        return replace(
            self, features=self.features[index], labels=self.labels[index]
        )

    def class_indices(self, code: int) -> np.ndarray:
        return np.flatnonzero(self.labels == code)


def numeric_mask(kinds) -> np.ndarray:
    return np.array([k == NUMERIC for k in kinds], dtype=bool)


def distance(a, b, kinds) -> float:
    """Dissimilarity between two rows under the given column kinds.

    Numeric columns contribute squared differences, categorical columns a
    0/1 mismatch, and the total is square-rooted.  With all-numeric kinds
    this is the Euclidean distance.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DatasetError(f"distance needs equal-length vectors, got {a.shape} and {b.shape}")
    if len(kinds) != a.shape[0]:
        raise DatasetError("kinds length does not match vector length")
    mask = numeric_mask(kinds)
    contrib = np.where(mask, (a - b) ** 2, (a != b).astype(np.float64))
    return float(np.sqrt(np.sum(contrib)))


def distances_to(X, x, kinds) -> np.ndarray:
    """Distance from every row of ``X`` to the single row ``x``.

    Row ``i`` equals ``distance(X[i], x, kinds)`` bit for bit: both paths
    reduce the same contiguous per-column contribution row with ``np.sum``.
    """
    X = np.asarray(X, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if X.ndim != 2 or x.shape != (X.shape[1],):
        raise DatasetError("distances_to expects a matrix and one row of matching width")
    mask = numeric_mask(kinds)
    diff = X - x[None, :]
    contrib = np.where(mask[None, :], diff * diff, (diff != 0).astype(np.float64))
    return np.sqrt(np.sum(np.ascontiguousarray(contrib), axis=1))


def pairwise_distances(X, kinds) -> np.ndarray:
    """Symmetric (n, n) distance matrix with a zero diagonal."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        out[i] = distances_to(X, X[i], kinds)
    # enforce exact symmetry and diagonal despite float noise in subtraction order
    out = np.minimum(out, out.T)
    np.fill_diagonal(out, 0.0)
    return out


def rank_by_distance(dists, exclude: int | None = None) -> np.ndarray:
    """Indices sorted by ascending distance, ties broken by ascending index.

    ``exclude`` drops one index (a vertex is never its own neighbour).
    """
    dists = np.asarray(dists, dtype=np.float64)
    order = np.argsort(dists, kind="stable")
    if exclude is not None:
        order = order[order != exclude]
    return order


@dataclass(frozen=True)
class Standardizer:
    """Column z-scoring fitted on one dataset and replayable on any row.

    Categorical columns pass through untouched; constant numeric columns
    map to all-zeros (their inverse scale is stored as zero).
    """

    mean: np.ndarray
    inv_scale: np.ndarray
    kinds: tuple[str, ...]

    @classmethod
    def fit(cls, ds: LabeledDataset) -> Standardizer:
        if ds.n_instances == 0:
            raise DatasetError("cannot fit a standardizer on an empty dataset")
        mask = numeric_mask(ds.kinds)
        mean = np.where(mask, ds.features.mean(axis=0), 0.0)
        sd = ds.features.std(axis=0)
        inv = np.zeros(ds.dim, dtype=np.float64)
        nz = mask & (sd > 0)
        inv[nz] = 1.0 / sd[nz]
        inv[~mask] = 1.0
        return cls(mean=mean, inv_scale=inv, kinds=ds.kinds)

    def transform_row(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return (x - self.mean) * self.inv_scale

    def transform_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (X - self.mean[None, :]) * self.inv_scale[None, :]

    def transform(self, ds: LabeledDataset) -> LabeledDataset:
        if ds.kinds != self.kinds:
            raise DatasetError("dataset column kinds differ from the fitted ones")
        return replace(ds, features=self.transform_matrix(ds.features), standardized=True)


def standardize(ds: LabeledDataset) -> LabeledDataset:
    """Z-score numeric columns in place of the originals (fit on ``ds`` itself)."""
    return Standardizer.fit(ds).transform(ds)


def _parse_float(token: str):
    try:
        return float(token)
    except ValueError:
        return None


def load_csv(
    path,
    label_column: int = -1,
    kinds=None,
    has_header: bool = False,
) -> LabeledDataset:
    """Read a delimited text file into a :class:`LabeledDataset`.

    Parameters
    ----------
    path : str or Path
        File to read.
    label_column : int
        Index of the class column (negative counts from the end).
    kinds : sequence of str, optional
        Column kinds for the *feature* columns, in post-removal order.
        When omitted, a column is numeric iff every value parses as float.
    has_header : bool
        Skip the first row.

    Raises
    ------
    DatasetError
        Naming the offending row/column for ragged rows, non-numeric
        values in numeric columns, or an empty table.
    """
    path = Path(path)
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            rows.append((lineno, [tok.strip() for tok in row]))
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    width = len(rows[0][1])
    for lineno, row in rows:
        if len(row) != width:
            raise DatasetError(
                f"{path}: row {lineno} has {len(row)} fields, expected {width}"
            )
    lc = label_column if label_column >= 0 else width + label_column
    if not 0 <= lc < width:
        raise DatasetError(f"{path}: label column {label_column} out of range for width {width}")
    if width < 2:
        raise DatasetError(f"{path}: need at least one feature column besides the label")

    label_tokens = [row[lc] for _, row in rows]
    feat_tokens = [[tok for i, tok in enumerate(row) if i != lc] for _, row in rows]
    d = width - 1

    if kinds is None:
        kinds = tuple(
            NUMERIC
            if all(_parse_float(r[j]) is not None for r in feat_tokens)
            else CATEGORICAL
            for j in range(d)
        )
    else:
        kinds = tuple(kinds)
        if len(kinds) != d:
            raise DatasetError(f"{path}: got {len(kinds)} kinds for {d} feature columns")

    label_names = tuple(sorted(set(label_tokens)))
    label_code = {name: i for i, name in enumerate(label_names)}
    labels = np.array([label_code[t] for t in label_tokens], dtype=np.int64)

    features = np.empty((len(rows), d), dtype=np.float64)
    categories: list[tuple[str, ...] | None] = []
    for j in range(d):
        if kinds[j] == NUMERIC:
            categories.append(None)
            for i, r in enumerate(feat_tokens):
                val = _parse_float(r[j])
                if val is None:
                    raise DatasetError(
                        f"{path}: row {rows[i][0]}, column {j + 1}: "
                        f"{r[j]!r} is not numeric"
                    )
                features[i, j] = val
        else:
            table = tuple(sorted({r[j] for r in feat_tokens}))
            categories.append(table)
            code = {tok: k for k, tok in enumerate(table)}
            for i, r in enumerate(feat_tokens):
                features[i, j] = code[r[j]]

    return LabeledDataset(
        features=features,
        labels=labels,
        kinds=kinds,
        label_names=label_names,
        categories=tuple(categories),
    )


def write_csv(ds: LabeledDataset, path, float_fmt: str = "%.17g") -> None:
    """Write ``ds`` with the label as the last column (inverse of load_csv defaults)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(ds.n_instances):
            row = []
            for j in range(ds.dim):
                if ds.kinds[j] == NUMERIC:
                    row.append(float_fmt % ds.features[i, j])
                else:
                    row.append(ds.categories[j][int(ds.features[i, j])])
            row.append(ds.label_names[ds.labels[i]])
            writer.writerow(row)


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx(path, expect_magic: int):
    with _open_maybe_gzip(path) as fh:
        header = fh.read(8)
        if len(header) < 8:
            raise DatasetError(f"{path}: truncated header")
        magic, count = struct.unpack(">ii", header)
        if magic != expect_magic:
            raise DatasetError(
                f"{path}: bad magic {magic}, expected {expect_magic}"
            )
        if expect_magic == _IDX_IMAGES_MAGIC:
            rows, cols = struct.unpack(">ii", fh.read(8))
            raw = fh.read(count * rows * cols)
            if len(raw) != count * rows * cols:
                raise DatasetError(f"{path}: truncated pixel data")
            data = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)
        else:
            raw = fh.read(count)
            if len(raw) != count:
                raise DatasetError(f"{path}: truncated label data")
            data = np.frombuffer(raw, dtype=np.uint8)
    return data


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Read big-endian IDX image/label files (the classic digit-image layout).

    Pixels are flattened row-major and scaled to [0, 1]; labels become class
    names by their decimal spelling.  Gzipped files are detected by magic.
    """
    images = _read_idx(images_path, _IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, _IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DatasetError(
            f"{images_path} has {images.shape[0]} images but "
            f"{labels_path} has {labels.shape[0]} labels"
        )
    label_names = tuple(str(v) for v in sorted(set(int(v) for v in labels)))
    code = {int(name): i for i, name in enumerate(label_names)}
    coded = np.array([code[int(v)] for v in labels], dtype=np.int64)
    d = images.shape[1]
    return LabeledDataset(
        features=images.astype(np.float64) / 255.0,
        labels=coded,
        kinds=(NUMERIC,) * d,
        label_names=label_names,
    )

"""Dataset I/O, normalization, splits and synthetic fixtures.

Matrices are stored with samples as columns (d x N) throughout.

Binary ``JPLD`` layout (all little-endian)::

    offset 0   4 bytes   magic b"JPLD"
    offset 4   1 byte    version (1)
    offset 5   u64       d
    offset 13  u64       N
    offset 21  d*N f64   values, column-major (sample after sample)
    ...        N u32     1-based labels, 0 = unlabeled
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import FormatError, InputError, ParseError

MAGIC = b"JPLD"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")


@dataclass
class Dataset:
    X: np.ndarray
    labels: Optional[np.ndarray] = None
    n_classes: int = 0
    train_idx: Optional[np.ndarray] = None
    test_idx: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or min(self.X.shape) < 1:
            raise InputError(f"data matrix must be d x N with d, N >= 1, got {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise InputError("data matrix contains non-finite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.n,):
                raise InputError(f"expected {self.n} labels, got {self.labels.shape}")
            if np.any(self.labels < 0):
                raise InputError("labels must be positive (0 marks unlabeled)")
            if not self.n_classes:
                self.n_classes = int(self.labels.max())
            elif self.labels.max() > self.n_classes:
                raise InputError(f"label {self.labels.max()} exceeds class count {self.n_classes}")
        if self.train_idx is not None or self.test_idx is not None:
            tr = np.asarray(self.train_idx if self.train_idx is not None else [], dtype=np.int64)
            te = np.asarray(self.test_idx if self.test_idx is not None else [], dtype=np.int64)
            both = np.concatenate([tr, te])
            if both.size and (both.min() < 0 or both.max() >= self.n):
                raise InputError("split index out of range")
            if np.intersect1d(tr, te).size:
                raise InputError("train and test splits overlap")
            self.train_idx, self.test_idx = tr, te

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def labeled(self) -> bool:
        return self.labels is not None and bool(np.all(self.labels > 0))

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.X[:, idx], labels, self.n_classes)


def atomic_write(path, data: bytes):
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- CSV -----------------------------------------------------------------------

def _parse_float(cell, line):
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", line) from None


def load_csv(path, orientation="rows", label_column=None):
    """Read a numeric CSV.

    Parameters
    ----------
    orientation : {"rows", "columns"}
        ``"rows"``: one sample per line. ``"columns"``: one feature per line.
    label_column : int or str, optional
        Index (negative allowed) or header name of the label field. For
        ``orientation="columns"`` it selects a line instead.

    A first line is treated as a header when it is not entirely numeric.
    """
    if orientation not in ("rows", "columns"):
        raise InputError(f"orientation must be 'rows' or 'columns', got {orientation!r}")
    with open(path, newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file", 1)

    header = None
    first_line, first = rows[0]
    try:
        [float(c) for c in first]
    except ValueError:
        header = [c.strip() for c in first]
        rows = rows[1:]
        if not rows:
            raise ParseError("file has a header but no data", first_line)

    width = len(rows[0][1])
    for line, r in rows:
        if len(r) != width:
            raise ParseError(f"expected {width} fields, found {len(r)}", line)

    if isinstance(label_column, str):
        if header is None or label_column not in header:
            if label_column.lstrip("-").isdigit():
                label_column = int(label_column)
            else:
                raise ParseError(f"no column named {label_column!r}", first_line)
        else:
            label_column = header.index(label_column)

    table = np.array([[_parse_float(c, line) for c in r] for line, r in rows])
    if orientation == "columns":
        table = table.T  # -> one sample per row

    labels = None
    if label_column is not None:
        n_fields = table.shape[1]
        if not -n_fields <= label_column < n_fields:
            raise ParseError(f"label column {label_column} out of range", first_line)
        col = label_column % n_fields
        raw = table[:, col]
        if np.any(np.mod(raw, 1) != 0) or np.any(raw < 0):
            bad = int(np.flatnonzero((np.mod(raw, 1) != 0) | (raw < 0))[0])
            raise ParseError("labels must be nonnegative integers", rows[bad][0] if orientation == "rows" else None)
        labels = raw.astype(np.int64)
        table = np.delete(table, col, axis=1)
    if table.shape[1] == 0:
        raise ParseError("no feature columns", first_line)
    if not np.all(np.isfinite(table)):
        raise ParseError("non-finite value in data", None)
    return Dataset(table.T.copy(), labels)


def save_csv(dataset, path, orientation="rows", with_labels=True):
    """Write a CSV readable by ``load_csv``; labels go in the last column (rows orientation)."""
    X = dataset.X
    lines = []
    if orientation == "rows":
        for k in range(dataset.n):
            cells = [repr(float(v)) for v in X[:, k]]
            if with_labels and dataset.labels is not None:
                cells.append(str(int(dataset.labels[k])))
            lines.append(",".join(cells))
    elif orientation == "columns":
        for row in X:
            lines.append(",".join(repr(float(v)) for v in row))
        if with_labels and dataset.labels is not None:
            lines.append(",".join(str(int(v)) for v in dataset.labels))
    else:
        raise InputError(f"orientation must be 'rows' or 'columns', got {orientation!r}")
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def load_labels(path):
    """One integer label per line (or comma separated)."""
    out = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            for cell in line.replace(",", " ").split():
                try:
                    out.append(int(cell))
                except ValueError:
                    raise ParseError(f"non-integer label {cell!r}", line_no) from None
    if not out:
        raise ParseError("empty label file", 1)
    return np.asarray(out, dtype=np.int64)


# -- binary --------------------------------------------------------------------

def to_bytes(dataset):
    d, n = dataset.X.shape
    labels = dataset.labels if dataset.labels is not None else np.zeros(n, dtype=np.int64)
    if np.any(labels > np.iinfo(np.uint32).max):
        raise InputError("label does not fit in 32 bits")
    return (
        _HEADER.pack(MAGIC, VERSION, d, n)
        + np.asfortranarray(dataset.X).astype("<f8").tobytes(order="F")
        + labels.astype("<u4").tobytes()
    )


def from_bytes(buf):
    if len(buf) < _HEADER.size:
        raise FormatError(f"truncated header ({len(buf)} bytes)", len(buf))
    magic, version, d, n = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if d < 1 or n < 1:
        raise FormatError(f"invalid dimensions d={d}, N={n}", 5)
    off = _HEADER.size
    need = off + 8 * d * n + 4 * n
    if len(buf) < need:
        raise FormatError(f"truncated payload: need {need} bytes, have {len(buf)}", len(buf))
    if len(buf) > need:
        raise FormatError(f"{len(buf) - need} trailing bytes", need)
    X = np.frombuffer(buf, dtype="<f8", count=d * n, offset=off).reshape((d, n), order="F")
    labels = np.frombuffer(buf, dtype="<u4", count=n, offset=off + 8 * d * n).astype(np.int64)
    if not np.all(np.isfinite(X)):
        bad = int(np.flatnonzero(~np.isfinite(X.ravel(order="F")))[0])
        raise FormatError("non-finite value", off + 8 * bad)
    return Dataset(X.astype(float), None if not labels.any() else labels)


def load_binary(path):
    return from_bytes(Path(path).read_bytes())


def save_binary(dataset, path):
    atomic_write(path, to_bytes(dataset))


def load(path, **kwargs):
    """Dispatch on extension: ``.jpld`` binary, anything else CSV."""
    if str(path).lower().endswith(".jpld"):
        return load_binary(path)
    return load_csv(path, **kwargs)


# -- normalization ---------------------------------------------------------------

@dataclass(frozen=True)
class Normalization:
    """Affine per-feature map ``(X - offset) * scale`` fitted on training data."""

    mode: str
    offset: np.ndarray
    scale: np.ndarray
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.offset.shape[0]:
            raise InputError(f"normalization fitted on {self.offset.shape[0]} features, got {X.shape[0]}")
        return (X - self.offset[:, None]) * self.scale[:, None]


MODES = ("none", "unit-columns", "zscore-features", "minmax-features")


def fit_normalization(X, mode="unit-columns"):
    X = np.asarray(X, dtype=float)
    d = X.shape[0]
    zeros = np.zeros(d)
    degenerate = np.zeros(d, dtype=bool)
    if mode == "none":
        return Normalization(mode, zeros, np.ones(d), degenerate)
    if mode == "unit-columns":
        top = float(np.linalg.norm(X, axis=0).max())
        s = 1.0 / top if top > 0 else 1.0
        return Normalization(mode, zeros, np.full(d, s), degenerate)
    if mode == "zscore-features":
        mean = X.mean(axis=1)
        std = X.std(axis=1)
        degenerate = std == 0
        return Normalization(mode, mean, np.where(degenerate, 0.0, 1.0 / np.where(degenerate, 1.0, std)), degenerate)
    if mode == "minmax-features":
        lo = X.min(axis=1)
        span = X.max(axis=1) - lo
        degenerate = span == 0
        return Normalization(mode, lo, np.where(degenerate, 0.0, 1.0 / np.where(degenerate, 1.0, span)), degenerate)
    raise InputError(f"unknown normalization mode {mode!r}; choose from {MODES}")


def normalize(X, mode="unit-columns"):
    """Return ``(normalized X, Normalization)``; the latter re-applies to test data.

    Constant features under ``zscore-features``/``minmax-features`` map to 0
    and are flagged in ``Normalization.degenerate`` (a warning is emitted).
    """
    params = fit_normalization(X, mode)
    if params.degenerate.any():
        warnings.warn(f"{int(params.degenerate.sum())} constant feature(s) mapped to 0", RuntimeWarning, stacklevel=2)
    return params.apply(X), params


# -- splits and synthetic data ---------------------------------------------------

def random_split(labels, per_class, seed):
    """Seeded stratified split: ``per_class`` training samples from each class.

    ``per_class`` may be an int or a fraction in (0, 1).
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train = []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        k = int(round(per_class * idx.size)) if 0 < per_class < 1 else int(per_class)
        if k < 1 or k >= idx.size:
            raise InputError(f"class {c} has {idx.size} samples; cannot take {k} for training")
        train.append(idx[:k])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(labels.size), train)
    return train, test


def load_index_file(path):
    """Whitespace/comma separated 0-based sample indices."""
    return load_labels(path)


def synth_blobs(classes, per_class, d, center_spread=1.0, noise_sigma=0.1, seed=0):
    """Gaussian blobs around centers drawn uniformly from ``[0, center_spread]^d``.

    Samples are grouped by class; labels are 1-based.
    """
    if classes < 2 or per_class < 1 or d < 1:
        raise InputError("need classes >= 2, per_class >= 1, d >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, 1.0, size=(d, classes)) * center_spread
    labels = np.repeat(np.arange(1, classes + 1), per_class)
    noise = rng.standard_normal((d, classes * per_class)) * noise_sigma
    X = centers[:, labels - 1] + noise
    return Dataset(X, labels, classes)


def two_blobs(per_class=50, d=10, gap=10.0, noise_sigma=0.1, seed=42):
    """Two Gaussian blobs whose centers are ``gap`` apart along the diagonal.

    The centers sit at ``gap`` and ``2 * gap`` along the all-ones direction so
    the samples are (almost surely) nonnegative.
    """
    rng = np.random.default_rng(seed)
    centers = np.empty((d, 2))
    centers[:, 0] = gap / np.sqrt(d)
    centers[:, 1] = 2.0 * gap / np.sqrt(d)
    labels = np.repeat([1, 2], per_class)
    X = centers[:, labels - 1] + rng.standard_normal((d, 2 * per_class)) * noise_sigma
    return Dataset(X, labels, 2)


BUNDLED = ("blobs", "four-class")


def bundled(name):
    """Deterministic fixtures with a 50/50 stratified split attached.

    ``blobs``: two blobs, d=10, N=100, sigma=0.1, centers 10 apart (seed 42).
    ``four-class``: four overlapping blobs, d=30, N=400 (seed 7); raw 1-NN is
    clearly imperfect on it.
    """
    if name == "blobs":
        ds, seed = two_blobs(50, 10, 10.0, 0.1, seed=42), 42
    elif name == "four-class":
        ds, seed = synth_blobs(4, 100, 30, center_spread=1.0, noise_sigma=0.5, seed=7), 7
    else:
        raise InputError(f"unknown bundled dataset {name!r}; choose from {BUNDLED}")
    ds.train_idx, ds.test_idx = random_split(ds.labels, 0.5, seed)
    return ds

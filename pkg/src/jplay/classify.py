"""Label encoding, 1-NN classification, accuracy and cross-validated grid search."""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError, ParameterError, StratificationError

GRID_PARAMS = ("alpha", "beta", "gamma", "eta")
DEFAULT_GRID = (1e-2, 1e-1, 1.0, 1e1, 1e2)


def one_hot(labels, n_classes):
    """L x N indicator matrix for 1-based class indices."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise InputError("labels must be a 1-D sequence")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.mod(labels, 1) == 0):
            raise InputError("labels must be integers")
        labels = labels.astype(np.int64)
    if labels.size and (labels.min() < 1 or labels.max() > n_classes):
        raise InputError(f"label indices must lie in [1, {n_classes}]")
    Y = np.zeros((n_classes, labels.size))
    Y[labels - 1, np.arange(labels.size)] = 1.0
    return Y


def decode(Y):
    """Inverse of ``one_hot``: 1-based argmax per column."""
    return np.argmax(np.asarray(Y), axis=0) + 1


def nn_classify(train_feats, train_labels, test_feats, chunk=2048):
    """Label of the Euclidean-nearest training column; ties go to the lowest index."""
    train_feats = np.asarray(train_feats, dtype=float)
    test_feats = np.asarray(test_feats, dtype=float)
    train_labels = np.asarray(train_labels)
    if train_feats.ndim != 2 or train_feats.shape[1] == 0:
        raise InputError("training set is empty")
    if train_labels.shape != (train_feats.shape[1],):
        raise InputError("need one training label per training sample")
    if test_feats.ndim != 2 or test_feats.shape[0] != train_feats.shape[0]:
        raise InputError(
            f"feature dimension mismatch: train {train_feats.shape[0]}, test {test_feats.shape}"
        )
    out = np.empty(test_feats.shape[1], dtype=train_labels.dtype)
    for start in range(0, test_feats.shape[1], chunk):
        block = test_feats[:, start:start + chunk]
        dist = cdist(block.T, train_feats.T, "sqeuclidean")
        # argmin returns the first minimum
        out[start:start + chunk] = train_labels[np.argmin(dist, axis=1)]
    return out


def overall_accuracy(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise InputError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise InputError("cannot score an empty prediction")
    return float(np.mean(pred == truth))


def stratified_folds(labels, folds, seed):
    """Fold index per sample.

    Each class is shuffled with a seeded generator, then dealt round-robin
    into the folds; the dealing position carries over between classes so
    fold sizes stay balanced.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise ParameterError(f"folds must be at least 2, got {folds}")
    if labels.size < folds:
        raise StratificationError(f"{labels.size} samples cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(labels.size, dtype=np.int64)
    pos = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < folds:
            raise StratificationError(f"class {c} has {idx.size} samples, fewer than {folds} folds")
        idx = rng.permutation(idx)
        assign[idx] = (pos + np.arange(idx.size)) % folds
        pos += idx.size
    return assign


@dataclass(frozen=True)
class GridRow:
    params: Tuple[float, ...]
    mean_accuracy: float
    fold_accuracies: Tuple[float, ...]


@dataclass
class GridResult:
    names: Tuple[str, ...]
    rows: List[GridRow]
    best: GridRow

    @property
    def best_params(self) -> Dict[str, float]:
        return dict(zip(self.names, self.best.params))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.names) + ["mean_accuracy", "fold_accuracies"])
        for r in self.rows:
            w.writerow(
                [repr(float(v)) for v in r.params]
                + [repr(r.mean_accuracy), ";".join(repr(a) for a in r.fold_accuracies)]
            )
        return buf.getvalue()


def _evaluate_fold(X, labels, n_classes, cfg, train_idx, test_idx):
    from .model import fit, transform

    Y = one_hot(labels[train_idx], n_classes)
    model = fit(X[:, train_idx], Y, cfg)
    pred = nn_classify(transform(model, X[:, train_idx]), labels[train_idx], transform(model, X[:, test_idx]))
    return overall_accuracy(pred, labels[test_idx])


def grid_search(X, labels, cfg_template, grid, folds=10, seed=0, jobs=1):
    """Cross-validated grid search over any subset of alpha, beta, gamma, eta.

    Parameters
    ----------
    X : ndarray (d, N)
    labels : array_like of 1-based ints
    cfg_template : JPlayConfig
        Every other setting is taken from here.
    grid : dict
        Parameter name -> candidate values. Cells are the cartesian product,
        enumerated with parameters in (alpha, beta, gamma, eta) order.
    folds, seed : int
        Stratified fold assignment.
    jobs : int
        Worker threads; results are assembled in a fixed order.

    Returns
    -------
    GridResult
        Best row maximizes mean accuracy, ties broken by the smallest
        parameter tuple.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels).astype(np.int64)
    if not grid:
        raise ParameterError("grid must name at least one parameter")
    unknown = set(grid) - set(GRID_PARAMS)
    if unknown:
        raise ParameterError(f"cannot grid over {sorted(unknown)}; allowed: {GRID_PARAMS}")
    names = tuple(n for n in GRID_PARAMS if n in grid)
    values = [[float(v) for v in grid[n]] for n in names]
    if any(len(v) == 0 for v in values):
        raise ParameterError("every grid parameter needs at least one value")
    cells = list(itertools.product(*values))

    assign = stratified_folds(labels, folds, seed)
    n_classes = int(labels.max())
    splits = [(np.flatnonzero(assign != f), np.flatnonzero(assign == f)) for f in range(folds)]

    tasks = []
    for cell in cells:
        cfg = cfg_template.replace(**dict(zip(names, cell)))
        for tr, te in splits:
            tasks.append((cfg, tr, te))

    def run(task):
        cfg, tr, te = task
        return _evaluate_fold(X, labels, n_classes, cfg, tr, te)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            accs = list(pool.map(run, tasks))
    else:
        accs = [run(t) for t in tasks]

    rows = []
    for i, cell in enumerate(cells):
        fa = tuple(accs[i * folds:(i + 1) * folds])
        rows.append(GridRow(params=cell, mean_accuracy=float(np.mean(fa)), fold_accuracies=fa))
    best = min(rows, key=lambda r: (-r.mean_accuracy, r.params))
    return GridResult(names=names, rows=rows, best=best)

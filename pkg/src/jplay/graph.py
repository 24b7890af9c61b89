"""kNN similarity graph and graph Laplacian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError, ParameterError

AUTO = "auto"


@dataclass(frozen=True)
class GraphLaplacian:
    """Adjacency ``W``, degree matrix ``D`` and Laplacian ``lap = D - W``."""

    W: np.ndarray
    D: np.ndarray
    lap: np.ndarray

    @property
    def n(self) -> int:
        return self.W.shape[0]


def _check_data(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputError(f"expected a 2-D data matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("data matrix contains non-finite entries")
    return X


def _knn_mask(dist2, k):
    """Boolean mask of directed kNN edges, keeping every neighbor tied at the boundary."""
    n = dist2.shape[0]
    d = dist2.copy()
    np.fill_diagonal(d, np.inf)
    kth = np.partition(d, k - 1, axis=1)[:, k - 1]
    mask = d <= kth[:, None]
    mask[np.arange(n), np.arange(n)] = False
    return mask


def knn_adjacency(X, k=10, bandwidth=AUTO, labels=None):
    """Heat-kernel weighted kNN adjacency over the columns of ``X``.

    Parameters
    ----------
    X : ndarray, shape (d, N)
        Samples as columns.
    k : int
        Number of neighbors; ties at the k-th distance are all kept.
    bandwidth : float or "auto"
        Kernel width sigma. ``"auto"`` uses the mean length of the kept edges.
    labels : array_like, optional
        If given, only samples sharing a label are connected (supervised graph).

    Returns
    -------
    W : ndarray, shape (N, N)
        Symmetric (OR-symmetrized), nonnegative, zero diagonal.
    """
    X = _check_data(X)
    n = X.shape[1]
    if n < 2:
        raise InputError("need at least two samples to build a graph")
    if not isinstance(k, (int, np.integer)) or k <= 0 or k >= n:
        raise ParameterError(f"k must satisfy 0 < k < N={n}, got {k}")
    if bandwidth != AUTO:
        bandwidth = float(bandwidth)
        if not bandwidth > 0 or not np.isfinite(bandwidth):
            raise ParameterError(f"bandwidth must be positive, got {bandwidth}")

    dist2 = cdist(X.T, X.T, "sqeuclidean")

    if labels is None:
        mask = _knn_mask(dist2, k)
    else:
        labels = np.asarray(labels)
        if labels.shape != (n,):
            raise InputError("labels must have one entry per sample")
        mask = np.zeros((n, n), dtype=bool)
        for c in np.unique(labels):
            idx = np.flatnonzero(labels == c)
            if idx.size < 2:
                continue
            sub = dist2[np.ix_(idx, idx)]
            mask[np.ix_(idx, idx)] = _knn_mask(sub, min(k, idx.size - 1))

    mask = mask | mask.T
    if bandwidth == AUTO:
        iu = np.triu(mask, 1)
        sigma = float(np.mean(np.sqrt(dist2[iu]))) if iu.any() else 0.0
        if sigma == 0.0:
            # every kept edge has zero length, so any width gives weight 1
            sigma = 1.0
    else:
        sigma = bandwidth

    W = np.where(mask, np.exp(-dist2 / (2.0 * sigma * sigma)), 0.0)
    # exact symmetry regardless of floating-point path
    W = np.triu(W, 1)
    return W + W.T


def laplacian(W):
    """Build the degree matrix and Laplacian for a valid adjacency."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise InputError(f"adjacency must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InputError("adjacency contains non-finite entries")
    if not np.array_equal(W, W.T):
        raise InputError("adjacency is not symmetric")
    if np.any(W < 0):
        raise InputError("adjacency has negative weights")
    if np.any(np.diag(W) != 0):
        raise InputError("adjacency diagonal must be zero")
    D = np.diag(W.sum(axis=1))
    return GraphLaplacian(W=W, D=D, lap=D - W)


def build_graph(X, k=10, bandwidth=AUTO, labels=None):
    """Convenience wrapper: ``laplacian(knn_adjacency(...))``."""
    return laplacian(knn_adjacency(X, k, bandwidth, labels))

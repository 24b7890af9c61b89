"""Linear embeddings: locality preserving projection and PCA."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InputError, RankError, ShapeError, SingularityError
from .graph import GraphLaplacian


@dataclass(frozen=True)
class Projection:
    """A linear map ``M`` of shape (d_out, d_in).

    ``spectrum`` carries the generalized eigenvalues (LPP, ascending) or the
    per-direction variances (PCA, descending); ``mean`` the centering vector
    for PCA.
    """

    M: np.ndarray
    spectrum: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.M.ndim != 2:
            raise ShapeError(f"projection must be 2-D, got shape {self.M.shape}")
        if not np.all(np.isfinite(self.M)):
            raise InputError("projection has non-finite entries")

    @property
    def d_in(self) -> int:
        return self.M.shape[1]

    @property
    def d_out(self) -> int:
        return self.M.shape[0]


def _normalize_signs(V):
    """Flip each column so that its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def default_ridge(X, graph: GraphLaplacian):
    """1e-6 * trace(X D X^T) / d_in."""
    deg = np.diag(graph.D)
    return 1e-6 * float(np.sum((X * X) @ deg)) / X.shape[0]


def fit_lpp(X, graph: GraphLaplacian, d_out, ridge=None):
    """Locality preserving projection.

    Solves ``(X L X^T) v = lam (X D X^T + ridge I) v`` and keeps the ``d_out``
    eigenvectors with the smallest eigenvalues as rows of the projection.
    Each row is normalized to unit norm in the constraint metric.

    Parameters
    ----------
    X : ndarray, shape (d_in, N)
    graph : GraphLaplacian
        Built over the same N samples.
    d_out : int
    ridge : float, optional
        Added to the constraint matrix. Defaults to ``default_ridge``.
    """
    X = np.asarray(X, dtype=float)
    d_in, n = X.shape
    if graph.n != n:
        raise ShapeError(f"graph has {graph.n} nodes but X has {n} samples")
    if d_out < 1 or d_out > d_in:
        raise RankError(f"d_out={d_out} must lie in [1, {d_in}]")
    if ridge is None:
        ridge = default_ridge(X, graph)
    if ridge < 0:
        raise InputError("ridge must be nonnegative")

    A = X @ graph.lap @ X.T
    A = 0.5 * (A + A.T)
    B = X @ graph.D @ X.T
    B = 0.5 * (B + B.T) + ridge * np.eye(d_in)

    b_eigs = np.linalg.eigvalsh(B)
    if b_eigs[-1] <= 0 or b_eigs[0] <= b_eigs[-1] * d_in * np.finfo(float).eps:
        raise SingularityError(
            "constraint matrix X D X^T + ridge*I is singular; increase ridge "
            f"(current {ridge:g})"
        )
    try:
        vals, vecs = scipy.linalg.eigh(A, B, subset_by_index=[0, d_out - 1])
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"generalized eigensolve failed ({exc}); increase ridge") from exc
    vecs = _normalize_signs(vecs)
    return Projection(M=vecs.T.copy(), spectrum=vals)


def fit_pca(X, d_out):
    """Top principal directions of the column-centered data.

    Variances use the population (N) denominator.
    """
    X = np.asarray(X, dtype=float)
    d_in, n = X.shape
    if d_out < 1 or d_out > min(d_in, n):
        raise RankError(f"d_out={d_out} must lie in [1, min(d_in, N)={min(d_in, n)}]")
    mean = X.mean(axis=1)
    Xc = X - mean[:, None]
    U, s, _ = np.linalg.svd(Xc, full_matrices=False)
    tol = s.max(initial=0.0) * max(d_in, n) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    if d_out > rank:
        raise RankError(f"d_out={d_out} exceeds the rank {rank} of the centered data")
    var = s[:d_out] ** 2 / n
    U = _normalize_signs(U[:, :d_out])
    return Projection(M=U.T.copy(), spectrum=var, mean=mean)


def apply(proj, X):
    """Return ``M @ X`` (no centering)."""
    M = proj.M if isinstance(proj, Projection) else np.asarray(proj, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or M.shape[1] != X.shape[0]:
        raise ShapeError(f"cannot apply a {M.shape} map to data of shape {X.shape}")
    return M @ X

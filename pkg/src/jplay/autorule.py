"""AutoRULe: layer-wise pre-training by ADMM.

Per layer, minimizes

    1/2 ||X - G^T H||_F^2 + eta/2 tr(Theta X L X^T Theta^T)

subject to H = G-copy constraints ``H = Theta X``, ``G = Theta``, ``Q = Theta X``
(Q >= 0) and ``S = Theta X`` (unit-bounded columns), where ``X`` is the
previous layer's features. Multipliers enter the augmented Lagrangian as
``<Lam_i, aux_i - target_i>``.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .embed import Projection
from .errors import DivergenceError, ParameterError, ShapeError, SingularityError
from .graph import GraphLaplacian

log = logging.getLogger(__name__)

_SHRINK = 1.0 - 2.0 ** -53


@dataclass(frozen=True)
class AdmmConfig:
    eta: float = 1.0
    mu0: float = 1e-3
    mu_max: float = 1e6
    rho: float = 2.0
    eps: float = 1e-6
    max_iter: int = 500
    relative_residuals: bool = False

    def __post_init__(self):
        if not self.eta >= 0:
            raise ParameterError(f"eta must be nonnegative, got {self.eta}")
        if not self.mu0 > 0:
            raise ParameterError(f"mu0 must be positive, got {self.mu0}")
        if not self.mu_max >= self.mu0:
            raise ParameterError(f"mu_max ({self.mu_max}) must be >= mu0 ({self.mu0})")
        if not self.rho > 1:
            raise ParameterError(f"rho must exceed 1, got {self.rho}")
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 0:
            raise ParameterError(f"max_iter must be a nonnegative integer, got {self.max_iter}")


@dataclass
class AdmmState:
    theta: np.ndarray
    H: np.ndarray
    G: np.ndarray
    Q: np.ndarray
    S: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    lam3: np.ndarray
    lam4: np.ndarray
    mu: float
    iter: int = 0

    @classmethod
    def initial(cls, theta0, X_prev, mu0):
        """H = Theta0 X, everything else zero."""
        theta0 = np.array(theta0, dtype=float)
        d_out, d_in = theta0.shape
        if X_prev.shape[0] != d_in:
            raise ShapeError(f"Theta0 expects {d_in} features, data has {X_prev.shape[0]}")
        n = X_prev.shape[1]
        zx = np.zeros((d_out, n))
        return cls(
            theta=theta0,
            H=theta0 @ X_prev,
            G=np.zeros_like(theta0),
            Q=zx.copy(),
            S=zx.copy(),
            lam1=zx.copy(),
            lam2=np.zeros_like(theta0),
            lam3=zx.copy(),
            lam4=zx.copy(),
            mu=float(mu0),
        )


@dataclass
class ConvergenceReport:
    iterations: int
    residuals: Tuple[float, float, float, float]
    converged: bool
    mu: float
    history: List[Tuple[float, float, float, float]] = field(default_factory=list)


def project_nonneg(M):
    """Entrywise ``max(M, 0)``."""
    return np.maximum(np.asarray(M, dtype=float), 0.0)


def project_unit_columns(M):
    """Scale every column with norm > 1 back onto the unit sphere.

    Columns already inside the unit ball are returned untouched, which makes
    the operator exactly idempotent.
    """
    M = np.array(M, dtype=float)
    norms = np.linalg.norm(M, axis=0)
    over = norms > 1.0
    if not over.any():
        return M
    M[:, over] = M[:, over] / norms[over]
    # rounding can leave a normalized column a few ulps outside the ball
    over = np.linalg.norm(M, axis=0) > 1.0
    while over.any():
        M[:, over] *= _SHRINK
        over = np.linalg.norm(M, axis=0) > 1.0
    return M


def _spd_solve(A, B, what):
    try:
        return scipy.linalg.solve(A, B, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularityError(f"{what} system is singular: {exc}") from exc


def _theta_step(state, X, XXt, XLXt, eta):
    mu = state.mu
    d = XXt.shape[0]
    rhs = (mu * (state.H + state.Q + state.S) + state.lam1 + state.lam3 + state.lam4) @ X.T
    rhs += mu * state.G + state.lam2
    A = eta * XLXt + 3.0 * mu * XXt + mu * np.eye(d)
    # Theta A = rhs with A symmetric
    return _spd_solve(A, rhs.T, "Theta").T


def _h_step(state, X, PtP=None, PtY=None):
    mu = state.mu
    G = state.G
    A = G @ G.T + mu * np.eye(G.shape[0])
    rhs = G @ X + mu * (state.theta @ X) - state.lam1
    if PtP is not None:
        A = A + PtP
        rhs = rhs + PtY
    return _spd_solve(A, rhs, "H")


def _g_step(state, X):
    mu = state.mu
    H = state.H
    A = H @ H.T + mu * np.eye(H.shape[0])
    rhs = H @ X.T + mu * state.theta - state.lam2
    return _spd_solve(A, rhs, "G")


def theta_update(state: AdmmState, X_prev, graph: GraphLaplacian, cfg: AdmmConfig):
    """Exact minimizer of the augmented Lagrangian in Theta."""
    X = np.asarray(X_prev, dtype=float)
    return _theta_step(state, X, X @ X.T, X @ graph.lap @ X.T, cfg.eta)


def h_update(state: AdmmState, X_prev, cfg: AdmmConfig = None, P_l=None, Y=None, alpha=0.0):
    """Exact minimizer in H.

    With ``P_l``, ``Y`` and ``alpha > 0`` the label-fit term
    ``alpha/2 ||Y - P_l H||^2`` is included (fine-tuning variant).
    """
    X = np.asarray(X_prev, dtype=float)
    if P_l is not None and alpha != 0:
        P_l = np.asarray(P_l, dtype=float)
        return _h_step(state, X, alpha * (P_l.T @ P_l), alpha * (P_l.T @ np.asarray(Y, dtype=float)))
    return _h_step(state, X)


def g_update(state: AdmmState, X_prev, cfg: AdmmConfig = None):
    """Exact minimizer in G."""
    return _g_step(state, np.asarray(X_prev, dtype=float))


def residuals(state: AdmmState, X_prev, relative=False):
    """Frobenius norms of H - Theta X, G - Theta, Q - Theta X, S - Theta X."""
    TX = state.theta @ X_prev
    r = (
        float(np.linalg.norm(state.H - TX)),
        float(np.linalg.norm(state.G - state.theta)),
        float(np.linalg.norm(state.Q - TX)),
        float(np.linalg.norm(state.S - TX)),
    )
    if relative:
        tiny = np.finfo(float).tiny
        ntx = float(np.linalg.norm(TX)) + tiny
        nth = float(np.linalg.norm(state.theta)) + tiny
        r = (r[0] / ntx, r[1] / nth, r[2] / ntx, r[3] / ntx)
    return r


def _check(name, M, t, history):
    if not np.all(np.isfinite(M)):
        raise DivergenceError(f"non-finite {name} at iteration {t}", trace=history)


def run_admm(X_prev, theta0, lap, eta, cfg: AdmmConfig, P_l=None, Y=None, alpha=0.0):
    """Shared ADMM loop for pre-training and fine-tuning.

    Returns the final state and a ConvergenceReport. ``lap`` is the Laplacian
    matrix (N x N).
    """
    X = np.asarray(X_prev, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DivergenceError("input features are non-finite")
    state = AdmmState.initial(theta0, X, cfg.mu0)
    XXt = X @ X.T
    XLXt = X @ lap @ X.T
    supervised = P_l is not None and alpha != 0
    if supervised:
        P_l = np.asarray(P_l, dtype=float)
        PtP = alpha * (P_l.T @ P_l)
        PtY = alpha * (P_l.T @ np.asarray(Y, dtype=float))
    else:
        PtP = PtY = None

    history = []
    res = (np.inf,) * 4
    converged = False
    for t in range(int(cfg.max_iter)):
        state.theta = _theta_step(state, X, XXt, XLXt, eta)
        _check("Theta", state.theta, t, history)
        state.H = _h_step(state, X, PtP, PtY)
        _check("H", state.H, t, history)
        state.G = _g_step(state, X)
        _check("G", state.G, t, history)
        TX = state.theta @ X
        state.Q = project_nonneg(TX - state.lam3 / state.mu)
        state.S = project_unit_columns(TX - state.lam4 / state.mu)
        _check("Q/S", state.S, t, history)

        mu = state.mu
        state.lam1 = state.lam1 + mu * (state.H - TX)
        state.lam2 = state.lam2 + mu * (state.G - state.theta)
        state.lam3 = state.lam3 + mu * (state.Q - TX)
        state.lam4 = state.lam4 + mu * (state.S - TX)
        _check("multipliers", state.lam1, t, history)
        state.mu = min(cfg.rho * mu, cfg.mu_max)
        state.iter = t + 1

        res = residuals(state, X, cfg.relative_residuals)
        history.append(res)
        if max(res) < cfg.eps:
            converged = True
            break

    if cfg.max_iter and not converged:
        log.warning("ADMM stopped after %d iterations, residuals %s", state.iter, res)
    report = ConvergenceReport(
        iterations=state.iter,
        residuals=tuple(res),
        converged=converged,
        mu=state.mu,
        history=history,
    )
    return state, report


def fit_autorule(X_prev, theta0, graph: GraphLaplacian, cfg: AdmmConfig):
    """Pre-train one layer starting from ``theta0`` (a Projection or matrix).

    Returns ``(Projection, ConvergenceReport)``.
    """
    M0 = theta0.M if isinstance(theta0, Projection) else np.asarray(theta0, dtype=float)
    state, report = run_admm(X_prev, M0, graph.lap, cfg.eta, cfg)
    if report.iterations == 0:
        return Projection(M=np.array(M0, dtype=float)), report
    return Projection(M=state.theta), report


def with_eta(cfg: AdmmConfig, eta):
    return dataclasses.replace(cfg, eta=eta)

"""J-Play training: greedy pre-training followed by alternating fine-tuning."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from .autorule import AdmmConfig, ConvergenceReport, fit_autorule, run_admm, with_eta
from .embed import Projection, fit_lpp
from .errors import DivergenceError, InputError, ParameterError, ShapeError, SingularityError
from .graph import AUTO, GraphLaplacian, build_graph

log = logging.getLogger(__name__)

TOP = None


@dataclass(frozen=True)
class JPlayConfig:
    """Hyper-parameters for one J-Play fit.

    ``eta`` weights the manifold term during pre-training, ``beta`` during
    fine-tuning; ``admm.eta`` is ignored in favour of these two.
    """

    layer_dims: Tuple[int, ...] = (20,)
    alpha: float = 1.0
    beta: float = 0.1
    gamma: float = 1.0
    eta: float = 1.0
    zeta: float = 1e-4
    outer_max_iter: int = 20
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    graph_k: int = 10
    bandwidth: Union[float, str] = AUTO
    per_layer_graph: bool = False
    supervised_graph: bool = False
    lpp_ridge: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if not dims:
            raise ParameterError("layer_dims must not be empty")
        if any(d < 1 or d != float(v) for d, v in zip(dims, self.layer_dims)):
            raise ParameterError(f"layer dimensions must be positive integers, got {self.layer_dims}")
        object.__setattr__(self, "layer_dims", dims)
        for name in ("alpha", "beta", "gamma", "eta"):
            v = getattr(self, name)
            if not (v >= 0 and np.isfinite(v)):
                raise ParameterError(f"{name} must be a nonnegative finite number, got {v}")
        if not self.zeta > 0:
            raise ParameterError(f"zeta must be positive, got {self.zeta}")
        if int(self.outer_max_iter) != self.outer_max_iter or self.outer_max_iter < 0:
            raise ParameterError(f"outer_max_iter must be a nonnegative integer, got {self.outer_max_iter}")
        if int(self.graph_k) != self.graph_k or self.graph_k < 1:
            raise ParameterError(f"graph_k must be a positive integer, got {self.graph_k}")
        if self.bandwidth != AUTO and not float(self.bandwidth) > 0:
            raise ParameterError(f"bandwidth must be positive or 'auto', got {self.bandwidth}")
        if self.lpp_ridge is not None and not self.lpp_ridge >= 0:
            raise ParameterError(f"lpp_ridge must be nonnegative, got {self.lpp_ridge}")

    @property
    def m(self) -> int:
        return len(self.layer_dims)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["layer_dims"] = list(self.layer_dims)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        admm = d.pop("admm", {}) or {}
        return cls(admm=AdmmConfig(**admm), **d)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Objective value and its four raw terms (before the 1/2, alpha/2, ... weights)."""

    total: float
    reconstruction: float
    prediction: float
    manifold: float
    regularization: float

    def as_tuple(self):
        return (self.total, self.reconstruction, self.prediction, self.manifold, self.regularization)


@dataclass
class TrainingReport:
    objectives: List[ObjectiveBreakdown] = field(default_factory=list)
    p_objectives: List[ObjectiveBreakdown] = field(default_factory=list)
    pretrain: List[ConvergenceReport] = field(default_factory=list)
    outer_iterations: int = 0
    converged: bool = False


@dataclass
class TrainedModel:
    """Projection stack ``thetas`` (Theta_1 first) and regression map ``p``.

    Treated as immutable once returned by ``fit``.
    """

    thetas: List[np.ndarray]
    p: np.ndarray
    config: JPlayConfig
    report: TrainingReport = field(default_factory=TrainingReport)
    # input preprocessing fitted on the training data (a data.Normalization)
    normalization: Optional[object] = None

    def __post_init__(self):
        self.thetas = [np.asarray(t, dtype=float) for t in self.thetas]
        self.p = np.asarray(self.p, dtype=float)
        for a, b in zip(self.thetas, self.thetas[1:]):
            if b.shape[1] != a.shape[0]:
                raise ShapeError(f"projection chain does not compose: {a.shape} then {b.shape}")
        if self.thetas and self.p.shape[1] != self.thetas[-1].shape[0]:
            raise ShapeError(f"P has {self.p.shape[1]} columns, top layer has {self.thetas[-1].shape[0]} rows")
        if not all(np.all(np.isfinite(t)) for t in self.thetas) or not np.all(np.isfinite(self.p)):
            raise InputError("model contains non-finite entries")

    @property
    def m(self) -> int:
        return len(self.thetas)

    @property
    def input_dim(self) -> int:
        return self.thetas[0].shape[1]

    @property
    def layer_dims(self) -> List[int]:
        return [t.shape[0] for t in self.thetas]

    def composite(self, upto=TOP):
        """Theta_upto ... Theta_1 as a single matrix."""
        upto = self.m if upto is TOP else upto
        V = self.thetas[0]
        for t in self.thetas[1:upto]:
            V = t @ V
        return V


def _laps(graph, m):
    if isinstance(graph, GraphLaplacian):
        return [graph.lap] * m
    graphs = list(graph)
    if len(graphs) != m:
        raise ShapeError(f"expected {m} layer graphs, got {len(graphs)}")
    return [g.lap for g in graphs]


def _layer_inputs(thetas, X):
    """[X_0, X_1, ..., X_m]."""
    out = [X]
    for t in thetas:
        out.append(t @ out[-1])
    return out


def _objective(thetas, p, X, Y, laps, alpha, beta, gamma):
    feats = _layer_inputs(thetas, X)
    recon = 0.0
    manifold = 0.0
    for t, Xp, lap in zip(thetas, feats[:-1], laps):
        Z = t @ Xp
        recon += float(np.sum((Xp - t.T @ Z) ** 2))
        manifold += float(np.sum((Z @ lap) * Z))
    pred = float(np.sum((Y - p @ feats[-1]) ** 2))
    reg = float(np.sum(p * p))
    total = 0.5 * recon + 0.5 * alpha * pred + 0.5 * beta * manifold + 0.5 * gamma * reg
    return ObjectiveBreakdown(total, recon, pred, manifold, reg)


def objective(model, X, Y, graph, cfg: Optional[JPlayConfig] = None):
    """Training objective with its term breakdown.

    ``graph`` is a single GraphLaplacian (used for every layer) or one per layer.
    """
    cfg = cfg or model.config
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] != model.input_dim:
        raise ShapeError(f"model expects {model.input_dim} features, data has {X.shape[0]}")
    if Y.shape != (model.p.shape[0], X.shape[1]):
        raise ShapeError(f"label matrix shape {Y.shape} does not match P {model.p.shape} and N={X.shape[1]}")
    laps = _laps(graph, model.m)
    if any(lap.shape != (X.shape[1],) * 2 for lap in laps):
        raise ShapeError("graph size does not match the number of samples")
    return _objective(model.thetas, model.p, X, Y, laps, cfg.alpha, cfg.beta, cfg.gamma)


def update_p(Y, X_top, alpha, gamma):
    """Closed-form ridge regression ``P = alpha Y X^T (alpha X X^T + gamma I)^-1``."""
    if alpha < 0 or gamma < 0:
        raise ParameterError("alpha and gamma must be nonnegative")
    if alpha == 0 and gamma == 0:
        raise ParameterError("alpha and gamma cannot both be zero: the objective is flat in P")
    Y = np.asarray(Y, dtype=float)
    X_top = np.asarray(X_top, dtype=float)
    if Y.shape[1] != X_top.shape[1]:
        raise ShapeError(f"Y has {Y.shape[1]} samples, features have {X_top.shape[1]}")
    d = X_top.shape[0]
    A = alpha * (X_top @ X_top.T) + gamma * np.eye(d)
    B = alpha * (X_top @ Y.T)
    try:
        return scipy.linalg.solve(A, B, assume_a="pos").T
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularityError(f"regression system is singular ({exc}); use gamma > 0") from exc


def residual_map(model, l):
    """P Theta_m ... Theta_{l+1} (1-based ``l``); P itself for the top layer."""
    m = len(model.thetas)
    if not 1 <= l <= m:
        raise IndexError(f"layer index {l} outside 1..{m}")
    P_l = model.p
    for t in reversed(model.thetas[l:]):
        P_l = P_l @ t
    return P_l


def finetune_theta(l, model, X, Y, graph, cfg: Optional[JPlayConfig] = None, return_report=False):
    """Refine layer ``l`` (1-based) with the label-aware ADMM.

    Runs the pre-training ADMM with manifold weight ``beta`` and the H-step
    augmented by ``alpha/2 ||Y - P_l H||^2``, starting from the current Theta_l.
    """
    cfg = cfg or model.config
    m = len(model.thetas)
    if not 1 <= l <= m:
        raise IndexError(f"layer index {l} outside 1..{m}")
    X = np.asarray(X, dtype=float)
    X_prev = _layer_inputs(model.thetas[: l - 1], X)[-1]
    lap = _laps(graph, m)[l - 1]
    P_l = residual_map(model, l)
    state, report = run_admm(X_prev, model.thetas[l - 1], lap, cfg.beta, cfg.admm, P_l, Y, cfg.alpha)
    M = model.thetas[l - 1] if report.iterations == 0 else state.theta
    proj = Projection(M=np.array(M, dtype=float))
    return (proj, report) if return_report else proj


def _relative_change(new, old):
    if old == 0:
        return 0.0 if new == 0 else np.inf
    return abs((new - old) / old)


def _check_labels(Y, n):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != n:
        raise ShapeError(f"label matrix must be L x {n}, got {Y.shape}")
    if np.count_nonzero(Y.sum(axis=1)) < 2:
        raise InputError("labels cover fewer than two classes")
    return Y


def pretrain(X, Y, cfg: JPlayConfig):
    """Greedy layer-wise initialization: LPP then AutoRULe for each layer.

    Returns ``(thetas, graphs, reports)`` where ``graphs`` holds one graph per
    layer (the same object repeated unless ``per_layer_graph`` is set).
    """
    X = np.asarray(X, dtype=float)
    labels = np.argmax(Y, axis=0) if cfg.supervised_graph else None
    n = X.shape[1]
    if n < cfg.graph_k + 1:
        raise InputError(f"need at least graph_k + 1 = {cfg.graph_k + 1} samples, got {n}")

    base = build_graph(X, cfg.graph_k, cfg.bandwidth, labels)
    admm = with_eta(cfg.admm, cfg.eta)
    thetas, graphs, reports = [], [], []
    X_cur = X
    for l, d_l in enumerate(cfg.layer_dims, start=1):
        if d_l > X_cur.shape[0]:
            raise ParameterError(f"layer {l} dimension {d_l} exceeds its input dimension {X_cur.shape[0]}")
        g = build_graph(X_cur, cfg.graph_k, cfg.bandwidth, labels) if (cfg.per_layer_graph and l > 1) else base
        theta0 = fit_lpp(X_cur, g, d_l, cfg.lpp_ridge)
        theta, rep = fit_autorule(X_cur, theta0, g, admm)
        log.info("layer %d pre-trained: %d iterations, converged=%s", l, rep.iterations, rep.converged)
        thetas.append(theta.M)
        graphs.append(g)
        reports.append(rep)
        X_cur = theta.M @ X_cur
    return thetas, graphs, reports


def fit(X, Y, cfg: JPlayConfig, progress=None):
    """Train a J-Play model.

    Parameters
    ----------
    X : ndarray, shape (d0, N)
    Y : ndarray, shape (L, N)
        One-hot labels.
    cfg : JPlayConfig
    progress : callable, optional
        Called as ``progress(iteration, ObjectiveBreakdown)`` after
        initialization (iteration 0) and after every outer sweep.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise InputError("data must be a finite 2-D matrix")
    Y = _check_labels(Y, X.shape[1])

    thetas, graphs, pre_reports = pretrain(X, Y, cfg)
    laps = [g.lap for g in graphs]
    report = TrainingReport(pretrain=pre_reports)

    def obj(ths, p):
        return _objective(ths, p, X, Y, laps, cfg.alpha, cfg.beta, cfg.gamma)

    p = update_p(Y, _layer_inputs(thetas, X)[-1], cfg.alpha, cfg.gamma)
    current = obj(thetas, p)
    report.objectives.append(current)
    if progress:
        progress(0, current)

    for t in range(1, int(cfg.outer_max_iter) + 1):
        try:
            p = update_p(Y, _layer_inputs(thetas, X)[-1], cfg.alpha, cfg.gamma)
            report.p_objectives.append(obj(thetas, p))
            for l in range(1, len(thetas) + 1):
                stack = TrainedModel(thetas=thetas, p=p, config=cfg)
                thetas[l - 1] = finetune_theta(l, stack, X, Y, graphs, cfg).M
            new = obj(thetas, p)
        except DivergenceError as exc:
            exc.trace = list(report.objectives)
            raise
        if not np.isfinite(new.total):
            raise DivergenceError(f"objective became non-finite at outer iteration {t}", trace=report.objectives)
        report.objectives.append(new)
        report.outer_iterations = t
        if progress:
            progress(t, new)
        change = _relative_change(new.total, current.total)
        current = new
        if change < cfg.zeta:
            report.converged = True
            break

    return TrainedModel(thetas=thetas, p=p, config=cfg, report=report)


def transform(model, X, upto=TOP):
    """Project ``X`` through Theta_1..Theta_upto (all layers by default)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != model.input_dim:
        raise ShapeError(f"model expects {model.input_dim} features, data has shape {X.shape}")
    upto = model.m if upto is TOP else upto
    if not 0 <= upto <= model.m:
        raise IndexError(f"layer index {upto} outside 0..{model.m}")
    for t in model.thetas[:upto]:
        X = t @ X
    return X


def predict_regression(model, X):
    """1-based class labels from ``argmax(P X_m)``."""
    return np.argmax(model.p @ transform(model, X), axis=0) + 1

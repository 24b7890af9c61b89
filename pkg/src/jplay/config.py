"""Run configuration: ``key = value`` files merged with command-line flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .autorule import AdmmConfig
from .classify import DEFAULT_GRID, GRID_PARAMS
from .data import MODES
from .errors import ConfigError, ParameterError
from .graph import AUTO
from .model import JPlayConfig


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int(s):
    f = float(s)
    if f != int(f):
        raise ValueError(f"not an integer: {s!r}")
    return int(f)


def _dims(s):
    if isinstance(s, (list, tuple)):
        return tuple(int(v) for v in s)
    parts = [p for p in str(s).replace(" ", "").split(",") if p]
    if not parts:
        raise ValueError("empty layer list")
    return tuple(_int(p) for p in parts)


def _bandwidth(s):
    return AUTO if str(s).strip().lower() == AUTO else float(s)


def _optional_float(s):
    return None if str(s).strip().lower() in ("", "none", "auto") else float(s)


def _mode(s):
    s = str(s).strip()
    if s not in MODES:
        raise ValueError(f"normalize must be one of {MODES}")
    return s


def parse_grid_spec(spec):
    """``"alpha=0.1,1"`` -> ("alpha", [0.1, 1.0]); a bare name uses the default grid."""
    name, _, values = str(spec).partition("=")
    name = name.strip()
    if name not in GRID_PARAMS:
        raise ConfigError(f"cannot grid over {name!r}; allowed: {', '.join(GRID_PARAMS)}")
    if not values.strip():
        return name, list(DEFAULT_GRID)
    try:
        return name, [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad grid values in {spec!r}") from None


def _grid(s):
    if isinstance(s, dict):
        return s
    items = s if isinstance(s, (list, tuple)) else [p for p in str(s).split(";") if p.strip()]
    out = {}
    for item in items:
        name, values = parse_grid_spec(item)
        out[name] = values
    return out


# key -> parser; dashes and underscores are interchangeable in files and flags
PARSERS = {
    "layers": _dims,
    "alpha": float,
    "beta": float,
    "gamma": float,
    "eta": float,
    "graph_k": _int,
    "bandwidth": _bandwidth,
    "supervised_graph": _bool,
    "per_layer_graph": _bool,
    "lpp_ridge": _optional_float,
    "admm_eps": float,
    "admm_max_iter": _int,
    "mu0": float,
    "mu_max": float,
    "rho": float,
    "relative_residuals": _bool,
    "zeta": float,
    "outer_max_iter": _int,
    "normalize": _mode,
    "folds": _int,
    "grid": _grid,
    "seed": _int,
    "jobs": _int,
}


@dataclass
class RunConfig:
    layers: Tuple[int, ...] = (20,)
    alpha: float = 1.0
    beta: float = 0.1
    gamma: float = 1.0
    eta: float = 1.0
    graph_k: int = 10
    bandwidth: Union[float, str] = AUTO
    supervised_graph: bool = False
    per_layer_graph: bool = False
    lpp_ridge: Optional[float] = None
    admm_eps: float = 1e-6
    admm_max_iter: int = 500
    mu0: float = 1e-3
    mu_max: float = 1e6
    rho: float = 2.0
    relative_residuals: bool = False
    zeta: float = 1e-4
    outer_max_iter: int = 20
    normalize: str = "unit-columns"
    folds: int = 10
    grid: Dict[str, List[float]] = field(default_factory=dict)
    seed: int = 0
    jobs: int = 1

    def jplay_config(self) -> JPlayConfig:
        """Build (and thereby validate) the training configuration."""
        admm = AdmmConfig(
            eta=self.eta,
            mu0=self.mu0,
            mu_max=self.mu_max,
            rho=self.rho,
            eps=self.admm_eps,
            max_iter=self.admm_max_iter,
            relative_residuals=self.relative_residuals,
        )
        return JPlayConfig(
            layer_dims=self.layers,
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
            eta=self.eta,
            zeta=self.zeta,
            outer_max_iter=self.outer_max_iter,
            admm=admm,
            graph_k=self.graph_k,
            bandwidth=self.bandwidth,
            per_layer_graph=self.per_layer_graph,
            supervised_graph=self.supervised_graph,
            lpp_ridge=self.lpp_ridge,
            seed=self.seed,
        )

    def validate(self):
        try:
            self.jplay_config()
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        if self.folds < 2:
            raise ConfigError(f"folds must be at least 2, got {self.folds}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        return self


def canonical_key(key):
    k = key.strip().replace("-", "_")
    if k not in PARSERS:
        raise ConfigError(f"unknown configuration key {key.strip()!r}")
    return k


def parse_value(key, raw):
    k = canonical_key(key)
    try:
        return k, PARSERS[k](raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            try:
                k, v = parse_value(key, raw.strip())
            except ConfigError as exc:
                raise ConfigError(f"{path}:{line_no}: {exc}") from None
            values[k] = v
    return values


def build_run_config(path=None, overrides=None):
    """File values first, then ``overrides`` (raw strings or parsed values) on top."""
    values = read_config_file(path) if path else {}
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        k, v = parse_value(key, raw)
        values[k] = v
    return dataclasses.replace(RunConfig(), **values).validate()

"""Text model format.

A JSON document; every float is written with 17 significant digits so a
save/load round trip is exact at double precision::

    {
      "format": "jplay-model",
      "version": 1,
      "input_dim": d0,
      "layer_dims": [d1, ..., dm],
      "config": {...},
      "thetas": [[[...], ...], ...],
      "p": [[...], ...],
      "normalization": null | {"mode": ..., "offset": [...], "scale": [...]},
      "report": {"objective_trace": [...], "outer_iterations": t, "converged": b}
    }
"""

from __future__ import annotations

import json
import math

import numpy as np

from .data import Normalization, atomic_write
from .errors import FormatError
from .model import JPlayConfig, ObjectiveBreakdown, TrainedModel, TrainingReport

FORMAT = "jplay-model"
VERSION = 1


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _dump(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        inner = ",\n".join(pad + "  " + _dump(v, indent + 1) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(f"{pad}  {json.dumps(str(k))}: {_dump(v, indent + 1)}" for k, v in obj.items())
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(model: TrainedModel) -> str:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "input_dim": model.input_dim,
        "layer_dims": model.layer_dims,
        "config": model.config.to_dict(),
        "thetas": model.thetas,
        "p": model.p,
        "normalization": None if model.normalization is None else {
            "mode": model.normalization.mode,
            "offset": model.normalization.offset,
            "scale": model.normalization.scale,
        },
        "report": {
            "objective_trace": [list(o.as_tuple()) for o in model.report.objectives],
            "outer_iterations": model.report.outer_iterations,
            "converged": model.report.converged,
        },
    }
    return _dump(doc) + "\n"


def loads(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc.msg} (line {exc.lineno})", exc.pos) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise FormatError("not a jplay model file")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        cfg = JPlayConfig.from_dict(doc["config"])
        thetas = [np.array(t, dtype=float).reshape(len(t), -1) for t in doc["thetas"]]
        p = np.array(doc["p"], dtype=float)
        rep = doc.get("report", {})
        report = TrainingReport(
            objectives=[ObjectiveBreakdown(*v) for v in rep.get("objective_trace", [])],
            outer_iterations=int(rep.get("outer_iterations", 0)),
            converged=bool(rep.get("converged", False)),
        )
        norm = doc.get("normalization")
        if norm is not None:
            norm = Normalization(
                mode=norm["mode"],
                offset=np.array(norm["offset"], dtype=float),
                scale=np.array(norm["scale"], dtype=float),
            )
        model = TrainedModel(thetas=thetas, p=p, config=cfg, report=report, normalization=norm)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model file: {exc}") from None
    if model.layer_dims != list(doc["layer_dims"]) or model.input_dim != doc["input_dim"]:
        raise FormatError("layer dimensions in header disagree with stored matrices")
    return model


def save_model(model: TrainedModel, path):
    atomic_write(path, dumps(model).encode())


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        return loads(fh.read())

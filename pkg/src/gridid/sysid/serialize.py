"""JSON round trip for identified models (row-major matrices, full float precision)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import InvalidArgument
from ..statespace import ContinuousStateSpace, DiscreteStateSpace
from .arx import ArxModel


def _m(a):
    return np.asarray(a, dtype=float).tolist()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def model_to_dict(model, provenance=None):
    prov = _jsonable(provenance or {})
    if isinstance(model, ArxModel):
        return {
            "type": "arx",
            "na": model.na,
            "nb": model.nb,
            "nk": model.nk,
            "dt": model.dt,
            "A": [_m(a) for a in model.A_coeffs],
            "B": [_m(b) for b in model.B_coeffs],
            "residual_covariance": _m(model.residual_covariance),
            "meta": _jsonable(model.meta),
            "provenance": prov,
        }
    if isinstance(model, (DiscreteStateSpace, ContinuousStateSpace)):
        d = {
            "type": "discrete_ss" if isinstance(model, DiscreteStateSpace) else "continuous_ss",
            "A": _m(model.A),
            "B": _m(model.B),
            "C": _m(model.C),
            "D": _m(model.D),
            "input_labels": list(model.input_labels),
            "output_labels": list(model.output_labels),
            "meta": _jsonable(model.meta),
            "provenance": prov,
        }
        if isinstance(model, DiscreteStateSpace):
            d["dt"] = model.dt
        return d
    raise InvalidArgument(f"cannot serialize {type(model).__name__}")


def model_from_dict(d):
    kind = d.get("type")
    if kind == "arx":
        m = len(d["residual_covariance"])
        A = np.array(d["A"], dtype=float).reshape(d["na"], m, m)
        return ArxModel(d["na"], d["nb"], A, np.array(d["B"]), d["dt"], np.array(d["residual_covariance"]),
                        d["nk"], meta=d.get("meta", {}))
    if kind in ("discrete_ss", "continuous_ss"):
        n = len(d["A"])
        A = np.array(d["A"], dtype=float).reshape(n, n)
        B = np.array(d["B"], dtype=float).reshape(n, -1) if n else np.zeros((0, len(d["input_labels"])))
        C = np.array(d["C"], dtype=float).reshape(-1, n) if n else np.zeros((len(d["output_labels"]), 0))
        args = (A, B, C, np.array(d["D"], dtype=float))
        if kind == "discrete_ss":
            return DiscreteStateSpace(*args, d["dt"], tuple(d["input_labels"]), tuple(d["output_labels"]), d.get("meta", {}))
        return ContinuousStateSpace(*args, tuple(d["input_labels"]), tuple(d["output_labels"]), d.get("meta", {}))
    raise InvalidArgument(f"unknown model type {kind!r}")


def save_model(model, path, provenance=None):
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model, provenance), indent=2, sort_keys=True) + "\n")
    return path


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))

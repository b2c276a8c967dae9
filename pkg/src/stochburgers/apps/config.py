"""Scenario configuration: JSON documents validated against a schema, with explicit defaults.

A user config only lists what it changes. It is deep-merged over DEFAULT_CONFIG and
the merged document must validate against SCHEMA. Every tolerance and grid parameter
therefore has a visible default in this file.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Mapping, Optional

import jsonschema

from ..core import SpaceTimeGrid
from ..errors import ConfigurationError

# ---------------------------------------------------------------------------------------
# defaults; the values reproduce the acceptance settings

DEFAULT_CONFIG: dict = {
    "seed": 20240611,
    "forward": {
        "family": "linearizable-forward",
        "grid": {"x_min": -8.0, "x_max": 8.0, "nx": 401, "T": 0.25, "nt": 16000},
        "sigma": 1.0, "b": 0.0, "m": 0.0, "f": 0.0, "c_bar": 0.0,
        "p0": {"kind": "tanh", "scale": 1.0},
        "scheme": "milstein",
        "n_paths": 8,
        "save_every": 1000,
        "refine": 1,
        "buffer_fraction": 0.2,
        "tolerances": {"l2_gap": 2e-2, "min_refinement_ratio": 2.0, "gauge": 1e-12},
    },
    "point_transform": {
        "n_points": 1000, "min_abs": 0.1, "max_abs": 2.0,
        "tolerances": {"residual": 1e-10},
    },
    "constraints": {
        "grid": {"x_min": -1.2, "x_max": 1.2, "nx": 41, "T": 0.5, "nt": 400},
        "sigma": -1.0,
        "families": [
            {"family": "example1", "profile": {"kind": "sin"}},
            {"family": "example2", "profile": {"kind": "sin", "offset": 2.0}},
        ],
        "n_paths": 4,
        "refine": 2,
        "m_shift": 0.5,
        "buffer_fraction": 0.2,
        "tolerances": {"decay_min": 3.0, "decay_max": 5.5, "control_max": 1.5},
    },
    "terminal": {
        "grid": {"x_min": -2.0, "x_max": 2.0, "nx": 41, "T": 1.0, "nt": 100},
        "scenarios": [
            {"family": "example1", "param": 2.0, "sigma": -1.0},
            {"family": "example1", "param": 0.5, "sigma": -0.25},
            {"family": "example2", "param": 1.0, "sigma": -1.0},
            {"family": "example2", "param": 3.0, "sigma": -0.5},
        ],
        "tolerances": {"residual": 1e-10},
    },
    "fk_forward": {
        "t": 0.25, "x": 0.0, "lambda": 0.5, "k": 1.0, "sigma": 1.0, "c_bar": 0.2,
        "n_samples": 100000,
        "pde_grid": {"x_min": -8.0, "x_max": 8.0, "nx": 801, "nt": 400},
        "tolerances": {"n_std": 3.0, "pde_extra": 1e-3},
    },
    "fk_backward": {
        "grid": {"x_min": -4.0, "x_max": 4.0, "nx": 81, "T": 1.0, "nt": 100},
        "x": 0.3, "sigma": -1.0, "beta": 1.5, "alpha": 2.0,
        "n_samples": 100000, "inner_batch": 0,
        "tolerances": {"n_std": 3.0},
    },
    "fbsde": {
        "grid": {"x_min": -4.0, "x_max": 4.0, "nx": 401, "T": 0.5, "nt": 200},
        "x0": 0.1, "sigma": -1.0,
        "families": [
            {"family": "example1", "profile": {"kind": "linear_sin"}},
            {"family": "example2", "profile": {"kind": "sin", "offset": 2.0}},
        ],
        "constant_scenarios": [
            {"family": "example1", "param": 2.0, "sigma": -1.0},
            {"family": "example2", "param": 1.0, "sigma": -0.5},
        ],
        "n_paths": 32,
        "refine": 2,
        "tolerances": {"decay_min": 1.4, "decay_max": 2.6, "identity_gap": 1e-10},
    },
    "controllability": {
        "grid": {"x_min": -2.0, "x_max": 2.0, "nx": 41, "T": 1.0, "nt": 100},
        "scenarios": [
            {"family": "example2", "param": 1.0, "sigma": -1.0},
            {"family": "example1", "param": 2.0, "sigma": -1.0},
            {"family": "example1", "param": 0.0, "sigma": -1.0},
        ],
        "tolerances": {"terminal_gap": 1e-10},
    },
    "pricing": {
        "grid": {"x_min": -2.0, "x_max": 2.0, "nx": 801, "T": 0.5, "nt": 100},
        "x0": 0.0, "rate": 0.03, "s0": 1.0,
        "scenarios": [
            {"family": 1, "param": 2.0, "sigma": -1.0, "gamma": 0.0},
            {"family": 2, "param": 1.0, "sigma": -0.5, "gamma": 0.0},
        ],
        "sweep": {"family": 2, "param": 1.0, "sigma": -0.5, "gamma": 0.5, "n_paths": 8},
        "refine": 2,
        "tolerances": {"price": 1e-12, "constant_gap": 1e-10, "gap_per_dt": 1.0, "halving_min": 1.5},
    },
    "infrastructure": {
        "n_samples": 4000, "n_seeds": 8,
        "tolerances": {"halving_rel": 0.2, "gauge": 1e-12},
    },
}

# ---------------------------------------------------------------------------------------
# schema

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int_pos = {"type": "integer", "minimum": 1}
_int_nonneg = {"type": "integer", "minimum": 0}


def _obj(props: Mapping[str, Any], required=None) -> dict:
    return {"type": "object", "properties": dict(props), "additionalProperties": False,
            "required": list(props) if required is None else list(required)}


def _tol(*names) -> dict:
    return _obj({n: _num for n in names})


_grid_T = _obj({"x_min": _num, "x_max": _num, "nx": {"type": "integer", "minimum": 3},
                "T": _pos, "nt": _int_pos})
_grid_noT = _obj({"x_min": _num, "x_max": _num, "nx": {"type": "integer", "minimum": 3}, "nt": _int_pos})
_profile = {"type": "object", "properties": {"kind": {"enum": [
    "constant", "sin", "linear_sin", "quadratic", "exp", "tanh", "tabulated"]}},
    "required": ["kind"]}
_family_name = {"enum": ["example1", "example2"]}
_fam_profile = _obj({"family": _family_name, "profile": _profile})
_const_scen = _obj({"family": _family_name, "param": _num, "sigma": _num})

SCHEMA: dict = _obj({
    "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    "forward": _obj({
        "family": {"enum": ["linearizable-forward"]}, "grid": _grid_T,
        "sigma": _num, "b": _num, "m": _num, "f": _num, "c_bar": _num, "p0": _profile,
        "scheme": {"enum": ["euler", "milstein"]}, "n_paths": _int_pos, "save_every": _int_pos,
        "refine": _int_pos, "buffer_fraction": _num, "tolerances": _tol("l2_gap", "min_refinement_ratio", "gauge")}),
    "point_transform": _obj({"n_points": _int_pos, "min_abs": _pos, "max_abs": _pos,
                             "tolerances": _tol("residual")}),
    "constraints": _obj({"grid": _grid_T, "sigma": _num,
                         "families": {"type": "array", "items": _fam_profile, "minItems": 1},
                         "n_paths": _int_pos, "refine": _int_pos, "m_shift": _num,
                         "buffer_fraction": _num,
                         "tolerances": _tol("decay_min", "decay_max", "control_max")}),
    "terminal": _obj({"grid": _grid_T, "scenarios": {"type": "array", "items": _const_scen, "minItems": 1},
                      "tolerances": _tol("residual")}),
    "fk_forward": _obj({"t": _pos, "x": _num, "lambda": _num, "k": _num, "sigma": _num, "c_bar": _num,
                        "n_samples": {"type": "integer", "minimum": 2}, "pde_grid": _grid_noT,
                        "tolerances": _tol("n_std", "pde_extra")}),
    "fk_backward": _obj({"grid": _grid_T, "x": _num, "sigma": _num, "beta": _pos, "alpha": _pos,
                         "n_samples": {"type": "integer", "minimum": 2}, "inner_batch": _int_nonneg,
                         "tolerances": _tol("n_std")}),
    "fbsde": _obj({"grid": _grid_T, "x0": _num, "sigma": _num,
                   "families": {"type": "array", "items": _fam_profile, "minItems": 1},
                   "constant_scenarios": {"type": "array", "items": _const_scen},
                   "n_paths": _int_pos, "refine": _int_pos,
                   "tolerances": _tol("decay_min", "decay_max", "identity_gap")}),
    "controllability": _obj({"grid": _grid_T, "scenarios": {"type": "array", "items": _const_scen, "minItems": 1},
                             "tolerances": _tol("terminal_gap")}),
    "pricing": _obj({"grid": _grid_T, "x0": _num, "rate": {"type": "number", "minimum": 0}, "s0": _pos,
                     "scenarios": {"type": "array", "items": _obj(
                         {"family": {"enum": [1, 2]}, "param": _num, "sigma": _num, "gamma": _num}),
                         "minItems": 1},
                     "sweep": _obj({"family": {"enum": [1, 2]}, "param": _num, "sigma": _num,
                                    "gamma": _num, "n_paths": _int_pos}),
                     "refine": _int_pos,
                     "tolerances": _tol("price", "constant_gap", "gap_per_dt", "halving_min")}),
    "infrastructure": _obj({"n_samples": {"type": "integer", "minimum": 2}, "n_seeds": _int_pos,
                            "tolerances": _tol("halving_rel", "gauge")}),
})


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(config: Mapping) -> dict:
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid config at {where}: {exc.message}") from None
    return dict(config)


def build_config(overrides: Optional[Mapping] = None, seed: Optional[int] = None,
                 refine: Optional[int] = None) -> dict:
    """Defaults merged with overrides, then the CLI-level seed and refine, then validated."""
    if overrides is not None and not isinstance(overrides, Mapping):
        raise ConfigurationError("config must be a JSON object")
    cfg = _merge(DEFAULT_CONFIG, overrides or {})
    if seed is not None:
        cfg["seed"] = seed
    if refine is not None:
        # one flag drives the number of refinement levels of every sweep
        for section in cfg.values():
            if isinstance(section, dict) and "refine" in section:
                section["refine"] = refine
    return validate(cfg)


def load_config(path=None, seed: Optional[int] = None, refine: Optional[int] = None) -> dict:
    overrides = None
    if path is not None:
        p = Path(path)
        try:
            overrides = json.loads(p.read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {p}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {p} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return build_config(overrides, seed, refine)


def make_grid(spec: Mapping, T: Optional[float] = None) -> SpaceTimeGrid:
    return SpaceTimeGrid(spec["x_min"], spec["x_max"], spec["nx"], spec.get("T", T), spec["nt"])

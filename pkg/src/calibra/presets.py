"""Run configurations: schema validation, presets, and object assembly.

A run configuration is plain JSON describing the case, the sampling, and
every stage's knobs. Presets carry the reference settings of the shipped
test cases at desk scale; any field can be overridden. ``validate_config``
names each offending key so a broken file is quick to fix.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from calibra.calibration import CalibrationConfig
from calibra.mapping import ControlGrid
from calibra.pipeline import NetConfig, PodConfig
from calibra.solver import Problem, dmr_problem, sod_problem, triple_point_problem

PRESET_NAMES = ("sod", "sod-param", "dmr", "dmr-param", "triple")


class ConfigError(ValueError):
    pass


_NET_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "hidden_layers": {"type": "integer", "minimum": 1},
        "width": {"type": "integer", "minimum": 1},
        "epochs": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "minimum": 0},
        "lr": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["case"],
    "properties": {
        "case": {"enum": list(PRESET_NAMES) + ["custom"]},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "grid": {
            "type": "array",
            "items": {"type": "integer", "minimum": 8},
            "minItems": 1,
            "maxItems": 2,
        },
        "t_final": {"type": "number", "exclusiveMinimum": 0},
        "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "snapshots": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            ]
        },
        "t_first": {"type": "number", "minimum": 0},
        "params": {
            "type": "object",
            "additionalProperties": {"type": "number"},
        },
        "train_params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "ranges": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
        "calibration": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "route": {"enum": ["self-similar", "quasi"]},
                "control": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 2},
                    "minItems": 1,
                    "maxItems": 2,
                },
                "delta": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "minimum": 0},
                "gap_frac": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.2},
                "det_eps": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 0},
                "ftol": {"type": "number", "exclusiveMinimum": 0},
                "fd_step": {"type": "number", "exclusiveMinimum": 0},
                "n_few": {"type": "integer", "minimum": 1},
                "n_few_pod": {"type": "integer", "minimum": 1},
                "rho_bar_index": {"type": "integer", "minimum": 0},
            },
        },
        "pod": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "minimum": 0},
                "cap": {"type": ["integer", "null"], "minimum": 1},
            },
        },
        "nets": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "calibration": _NET_SCHEMA,
                "coefficient": _NET_SCHEMA,
            },
        },
        "window": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
        "components": {
            "type": "array",
            "items": {"enum": ["rho", "mx", "my", "E"]},
            "minItems": 1,
        },
        "n_list": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
    },
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)


def validate_config(config: dict) -> list[str]:
    """All schema violations, each naming the offending key; empty if valid."""
    msgs = []
    for err in sorted(_VALIDATOR.iter_errors(config), key=lambda e: list(e.absolute_path)):
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        if err.validator == "additionalProperties":
            msgs.append(f"{where}: {err.message}")
        else:
            msgs.append(f"key {where!r}: {err.message}")
    return msgs


def check_config(config: dict) -> dict:
    errors = validate_config(config)
    if errors:
        raise ConfigError("; ".join(errors))
    return config


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        with open(path) as f:
            config = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"no config file at {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return check_config(config)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

_PRESETS: dict[str, dict] = {
    # 1D shock tube, one trajectory of 25 snapshots.
    "sod": {
        "case": "sod",
        "seed": 0,
        "grid": [1500],
        "t_final": 0.16,
        "cfl": 0.8,
        "snapshots": 25,
        "t_first": 0.01,
        "calibration": {
            "route": "self-similar",
            "control": [6],
            "delta": 1e-6,
            "alpha": 0.0,
            "max_iter": 100,
        },
        "pod": {"tol": 1e-4, "cap": 7},
        "nets": {
            "calibration": {"epochs": 20000, "tol": 1e-6},
            "coefficient": {"epochs": 10000, "tol": 1e-5},
        },
        "components": ["rho", "mx", "E"],
        "n_list": [1, 2, 3, 4],
    },
    # shock tube with random initial states; quasi-self-similar calibration
    "sod-param": {
        "case": "sod-param",
        "seed": 0,
        "grid": [800],
        "t_final": 0.16,
        "cfl": 0.8,
        "snapshots": 12,
        "t_first": 0.01,
        "train_params": {
            "count": 8,
            "ranges": {
                "rhoL": [0.7, 1.3],
                "rhoR": [0.1, 0.15],
                "pL": [0.7, 1.3],
                "pR": [0.05, 0.15],
            },
        },
        "calibration": {
            "route": "quasi",
            "control": [6],
            "delta": 1e-6,
            "alpha": 0.0,
            "max_iter": 100,
            "n_few": 10,
            "n_few_pod": 3,
        },
        "pod": {"tol": 1e-4, "cap": 7},
        "nets": {
            "calibration": {"epochs": 20000, "tol": 1e-6},
            "coefficient": {"epochs": 10000, "tol": 1e-5},
        },
        "components": ["rho"],
        "n_list": [1, 3, 5, 7],
    },
    # double Mach reflection at beta = pi/6
    "dmr": {
        "case": "dmr",
        "seed": 0,
        "grid": [240, 60],
        "t_final": 0.25,
        "cfl": 0.8,
        "snapshots": 40,
        "params": {"beta": math.pi / 6.0},
        "window": [0.02, 0.2],
        "calibration": {
            "route": "self-similar",
            "control": [7, 6],
            "delta": 1e-2,
            "alpha": 1e-4,
            "max_iter": 100,
        },
        "pod": {"tol": 1e-4, "cap": 7},
        "nets": {
            "calibration": {"epochs": 20000, "tol": 1e-6},
            "coefficient": {"epochs": 10000, "tol": 1e-5},
        },
        "components": ["rho"],
        "n_list": [1, 2, 4, 7],
    },
    # double Mach reflection over a range of shock angles
    "dmr-param": {
        "case": "dmr-param",
        "seed": 0,
        "grid": [120, 30],
        "t_final": 0.2,
        "cfl": 0.8,
        "snapshots": 11,
        "train_params": {
            "count": 4,
            "ranges": {"beta": [0.1, 0.675]},
        },
        "calibration": {
            "route": "self-similar",
            "control": [7, 6],
            "delta": 1e-1,
            "alpha": 1e-4,
            "max_iter": 100,
        },
        "pod": {"tol": 1e-4, "cap": 7},
        "nets": {
            "calibration": {"epochs": 20000, "tol": 1e-6},
            "coefficient": {"epochs": 10000, "tol": 1e-5},
        },
        "components": ["rho"],
        "n_list": [1, 2, 4, 7],
    },
    # triple point: three-state interaction
    "triple": {
        "case": "triple",
        "seed": 0,
        "grid": [140, 60],
        "t_final": 0.25,
        "cfl": 0.8,
        "snapshots": 20,
        "calibration": {
            "route": "self-similar",
            "control": [8, 6],
            "delta": 1e-2,
            "alpha": 1e-4,
            "max_iter": 100,
        },
        "pod": {"tol": 1e-4, "cap": 7},
        "nets": {
            "calibration": {"epochs": 20000, "tol": 1e-6},
            "coefficient": {"epochs": 10000, "tol": 1e-5},
        },
        "components": ["rho"],
        "n_list": [1, 2, 4, 7],
    },
}


def preset_config(name: str) -> dict:
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    return copy.deepcopy(_PRESETS[name])


def merge_overrides(config: dict, overrides: dict) -> dict:
    """Shallow per-section merge of override values into a config."""
    out = copy.deepcopy(config)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key].update({k: v for k, v in value.items() if v is not None})
        else:
            out[key] = value
    return check_config(out)


# ---------------------------------------------------------------------------
# object assembly
# ---------------------------------------------------------------------------


def _case_kind(config: dict) -> str:
    case = config["case"]
    return {"sod": "sod", "sod-param": "sod", "dmr": "dmr", "dmr-param": "dmr", "triple": "triple"}.get(
        case, "sod"
    )


def build_problem(config: dict, params: dict | None = None) -> Problem:
    """Solver setup for one physical-parameter value of a config."""
    kind = _case_kind(config)
    grid = config.get("grid", [1500] if kind == "sod" else [240, 60])
    p = dict(config.get("params", {}))
    if params:
        p.update(params)
    t_final = config.get("t_final", 0.2 if kind == "sod" else 0.25)
    cfl = config.get("cfl", 0.8)
    if kind == "sod":
        if len(grid) != 1:
            raise ConfigError("sod cases use a one-entry grid")
        return sod_problem(
            grid[0],
            rho_l=p.get("rhoL", 1.0),
            p_l=p.get("pL", 1.0),
            rho_r=p.get("rhoR", 0.1),
            p_r=p.get("pR", 0.125),
            x_split=p.get("x0", 0.5),
            t_final=t_final,
            cfl=cfl,
        )
    if len(grid) != 2:
        raise ConfigError(f"{config['case']} cases use a two-entry grid")
    if kind == "dmr":
        return dmr_problem(
            grid[0], grid[1], beta=p.get("beta", math.pi / 6.0), t_final=t_final, cfl=cfl
        )
    return triple_point_problem(grid[0], grid[1], t_final=t_final, cfl=cfl)


def snapshot_times(config: dict) -> np.ndarray:
    """The time samples a config requests, equispaced unless given as a list."""
    t_final = config.get("t_final", 0.2)
    snaps = config.get("snapshots", 25)
    if isinstance(snaps, list):
        times = np.asarray(snaps, dtype=float)
    else:
        t_first = config.get("t_first", t_final / snaps)
        times = np.linspace(t_first, t_final, int(snaps))
    if times[-1] > t_final + 1e-12:
        raise ConfigError("snapshot times exceed t_final")
    return times


def training_parameters(config: dict) -> tuple[list[str], np.ndarray]:
    """Physical-parameter names and sampled training values.

    Non-parametric cases return a single empty row. Sampling is uniform in
    the configured ranges with the run seed.
    """
    tp = config.get("train_params")
    if not tp:
        return [], np.zeros((1, 0))
    names = sorted(tp["ranges"])
    rng = np.random.default_rng(config.get("seed", 0))
    lo = np.array([tp["ranges"][k][0] for k in names])
    hi = np.array([tp["ranges"][k][1] for k in names])
    for name, a, b in zip(names, lo, hi):
        if not a < b:
            raise ConfigError(f"train_params.ranges.{name}: empty range [{a}, {b}]")
    samples = rng.uniform(lo, hi, size=(tp["count"], len(names)))
    return names, samples


def control_grid_for(config: dict, problem: Problem) -> ControlGrid:
    cal = config.get("calibration", {})
    shape = tuple(cal.get("control", (6,) if problem.grid.ndim == 1 else (7, 6)))
    if len(shape) != problem.grid.ndim:
        raise ConfigError(
            f"calibration.control has {len(shape)} entries for a {problem.grid.ndim}D case"
        )
    return ControlGrid.spanning(problem.grid.lo, problem.grid.hi, shape)


def calibration_config_for(config: dict) -> CalibrationConfig:
    cal = dict(config.get("calibration", {}))
    cal.pop("route", None)
    cal.pop("control", None)
    cal.pop("rho_bar_index", None)
    return CalibrationConfig(**cal)


def pod_config_for(config: dict) -> PodConfig:
    return PodConfig(**config.get("pod", {}))


def net_configs_for(config: dict) -> tuple[NetConfig, NetConfig]:
    nets = config.get("nets", {})
    seed = config.get("seed", 0)
    cal = {"seed": seed, **nets.get("calibration", {})}
    coeff = {"seed": seed, **nets.get("coefficient", {})}
    return NetConfig(**{"epochs": 20000, "tol": 1e-6, **cal}), NetConfig(
        **{"epochs": 10000, "tol": 1e-5, **coeff}
    )

"""Run configs: JSON documents selecting a preset or an inline problem.

Unknown keys are errors.  Component-index maps use 1-based indices encoded
as JSON object keys ("1", "2", ...).  A config may name a preset

    {"problem": "a320-climb"}

or spell out an inline problem

    {"problem": {"system": "harmonic-oscillator", "t_final": 1.57...,
                 "fixed_at_start": {"1": 0.0}, "fixed_at_end": {"1": 1.0}},
     "n_nodes": 2000, "relax_k": 500.0}

Top-level solver keys (n_nodes, relax_k, tolerances, free_start_defaults,
endpoint_correction, engine, out, report) override preset defaults; the
"oracle" section configures the shooting command.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .problem import BoundaryConditions, BvpProblem, RelaxationParams, make_grid
from .shooting import ShootingConfig
from .systems import get_system

__all__ = ["ResolvedRun", "load_config", "resolve_config", "preset_names"]

_TOP_KEYS = {"problem", "n_nodes", "relax_k", "outer_tol", "max_outer_iter",
             "newton_tol", "newton_max_iter", "free_start_defaults",
             "endpoint_correction", "engine", "out", "report", "oracle"}
_PROBLEM_KEYS = {"system", "system_params", "t_final", "fixed_at_start",
                 "fixed_at_end"}
_ORACLE_KEYS = {"integrator", "root_tol", "max_root_iter", "bracket", "guess"}

PRESETS: dict[str, dict] = {
    "a320-climb": {
        "problem": {
            "system": "a320-flight",
            "system_params": {},
            "t_final": 532.0,
            "fixed_at_start": {"1": 0.0, "3": 150.0, "4": 0.0},
            "fixed_at_end": {"1": 11000.0},
        },
        "n_nodes": 3000,
        "relax_k": 509.0,
        "free_start_defaults": {"2": 0.05},
        "labels": ["h", "gamma", "V", "x"],
        "oracle": {"integrator": "euler", "root_tol": 1e-6,
                   "max_root_iter": 200, "bracket": [0.0, 0.3]},
    },
    "oscillator": {
        "problem": {
            "system": "harmonic-oscillator",
            "system_params": {},
            "t_final": math.pi / 2,
            "fixed_at_start": {"1": 0.0},
            "fixed_at_end": {"1": 1.0},
        },
        "n_nodes": 2000,
        "relax_k": 500.0,
        "free_start_defaults": {"2": 0.0},
        "labels": ["u1", "u2"],
        "oracle": {"integrator": "euler", "root_tol": 1e-10,
                   "max_root_iter": 200, "bracket": [0.5, 1.5]},
    },
}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(PRESETS))


@dataclass
class ResolvedRun:
    problem: BvpProblem
    params: RelaxationParams
    free_start_defaults: dict[int, float]
    labels: list[str]
    endpoint_correction: bool = True
    engine: Optional[str] = None
    out_path: Optional[str] = None
    report_path: Optional[str] = None
    oracle: ShootingConfig = field(default_factory=ShootingConfig)
    preset: Optional[str] = None


def load_config(path) -> dict:
    """Read and JSON-parse a config file; I/O and syntax problems raise ConfigError."""
    try:
        with open(path, "r") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path!r}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(raw).__name__}")
    return raw


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def _index_map(raw, where: str) -> dict[int, float]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object of index -> value")
    out = {}
    for key, val in raw.items():
        try:
            idx = int(key)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: bad component index {key!r}") from None
        try:
            out[idx] = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}[{key}]: bad value {val!r}") from None
    return out


def _number(raw, name, kind=float):
    try:
        value = kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a {kind.__name__}, got {raw!r}") from None
    if kind is int and isinstance(raw, float) and raw != value:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    return value


def resolve_config(raw: dict) -> ResolvedRun:
    """Validate a raw config dict and build the problem, params and settings."""
    _check_keys(raw, _TOP_KEYS, "config")
    problem_spec = raw.get("problem")
    if problem_spec is None:
        raise ConfigError("config is missing the 'problem' key")

    preset = None
    merged: dict = {}
    if isinstance(problem_spec, str):
        if problem_spec not in PRESETS:
            raise ConfigError(
                f"unknown preset {problem_spec!r}; available: {', '.join(preset_names())}")
        preset = problem_spec
        merged = json.loads(json.dumps(PRESETS[problem_spec]))  # deep copy
        problem_block = merged["problem"]
    elif isinstance(problem_spec, dict):
        _check_keys(problem_spec, _PROBLEM_KEYS, "problem")
        problem_block = problem_spec
    else:
        raise ConfigError("'problem' must be a preset name or an object")

    system_name = problem_block.get("system")
    if not isinstance(system_name, str):
        raise ConfigError("problem.system must be a registered system name")
    system_params = problem_block.get("system_params") or {}
    if not isinstance(system_params, dict):
        raise ConfigError("problem.system_params must be an object")
    system = get_system(system_name, **system_params)

    t_final = _number(problem_block.get("t_final"), "problem.t_final")
    fixed_at_start = _index_map(problem_block.get("fixed_at_start"),
                                "problem.fixed_at_start")
    fixed_at_end = _index_map(problem_block.get("fixed_at_end"),
                              "problem.fixed_at_end")
    bc = BoundaryConditions(dimension=system.dimension,
                            fixed_at_start=fixed_at_start,
                            fixed_at_end=fixed_at_end)

    n_nodes = _number(raw.get("n_nodes", merged.get("n_nodes", 1000)),
                      "n_nodes", int)
    grid = make_grid(n_nodes, t_final)
    problem = BvpProblem(system=system, bc=bc, grid=grid)

    params = RelaxationParams(
        relax_k=_number(raw.get("relax_k", merged.get("relax_k", 509.0)), "relax_k"),
        outer_tol=_number(raw.get("outer_tol", merged.get("outer_tol", 1e-8)),
                          "outer_tol"),
        max_outer_iter=_number(raw.get("max_outer_iter",
                                       merged.get("max_outer_iter", 20000)),
                               "max_outer_iter", int),
        newton_tol=_number(raw.get("newton_tol", merged.get("newton_tol", 1e-10)),
                           "newton_tol"),
        newton_max_iter=_number(raw.get("newton_max_iter",
                                        merged.get("newton_max_iter", 50)),
                                "newton_max_iter", int),
    )

    free_defaults = _index_map(raw.get("free_start_defaults",
                                       merged.get("free_start_defaults")),
                               "free_start_defaults")

    labels = merged.get("labels") or [f"u{j}" for j in range(1, system.dimension + 1)]

    oracle_raw = raw.get("oracle", merged.get("oracle", {})) or {}
    if not isinstance(oracle_raw, dict):
        raise ConfigError("'oracle' must be an object")
    _check_keys(oracle_raw, _ORACLE_KEYS, "oracle")
    bracket = oracle_raw.get("bracket")
    if bracket is not None:
        if not (isinstance(bracket, (list, tuple)) and len(bracket) == 2):
            raise ConfigError("oracle.bracket must be a two-element array")
        bracket = (bracket[0], bracket[1])
    guess = oracle_raw.get("guess")
    oracle = ShootingConfig(
        integrator=oracle_raw.get("integrator", "euler"),
        root_tol=_number(oracle_raw.get("root_tol", 1e-8), "oracle.root_tol"),
        max_root_iter=_number(oracle_raw.get("max_root_iter", 100),
                              "oracle.max_root_iter", int),
        bracket=bracket,
        guess=guess,
    )

    endpoint_correction = raw.get("endpoint_correction",
                                  merged.get("endpoint_correction", True))
    if not isinstance(endpoint_correction, bool):
        raise ConfigError("endpoint_correction must be true or false")
    engine = raw.get("engine", merged.get("engine"))
    if engine is not None and engine not in ("auto", "python", "compiled"):
        raise ConfigError(f"engine must be auto, python or compiled, got {engine!r}")

    return ResolvedRun(
        problem=problem,
        params=params,
        free_start_defaults=free_defaults,
        labels=list(labels),
        endpoint_correction=endpoint_correction,
        engine=engine,
        out_path=raw.get("out", merged.get("out")),
        report_path=raw.get("report", merged.get("report")),
        oracle=oracle,
        preset=preset,
    )

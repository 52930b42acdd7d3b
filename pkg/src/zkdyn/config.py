"""Run configuration: a TOML document with dotted sections.

Example::

    [action]
    matrices = [[[2, 1], [1, 1]], [[5, 3], [3, 2]]]
    epsilon = [0.3, 0.3]          # optional smooth conjugacy

    [run]
    n_steps = 100000
    seed = 7

    [direction]
    v = [1, 1]                    # scaled to unit length

Unknown sections or keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import NotIntegerMatrix, ValidationError
from .spectrum import EstimatorConfig
from .toral import MODELS

SCHEMA: dict[str, dict[str, object]] = {
    "action": {"matrices": None, "model": None, "epsilon": None},
    "run": {"n_steps": 10**5, "burn_in": 10**3, "reorth_period": 1,
            "grouping_epsilon": 0.05, "seed": 0, "x0": None},
    "random": {"weights": None, "n_omegas": 10, "sample_points": 16},
    "direction": {"v": None},
    "sweep": {"resolution": 64},
    "check": {"tolerance": 1e-2},
    "output": {"path": None, "format": None},
}


class ConfigError(ValidationError):
    pass


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x) -> bool:
    return (_is_int(x) or isinstance(x, float)) and math.isfinite(x)


def _int_in(name, x, lo, hi):
    if not _is_int(x) or not lo <= x <= hi:
        raise ConfigError(f"{name} must be an integer in [{lo}, {hi}], got {x!r}")
    return x


def _positive(name, x):
    if not _is_real(x) or x <= 0:
        raise ConfigError(f"{name} must be a positive number, got {x!r}")
    return float(x)


def _real_list(name, x, length=None):
    if not isinstance(x, list) or not x or not all(_is_real(v) for v in x):
        raise ConfigError(f"{name} must be a non-empty list of numbers")
    if length is not None and len(x) != length:
        raise ConfigError(f"{name} must have {length} entries, got {len(x)}")
    return [float(v) for v in x]


@dataclass(frozen=True)
class RunConfig:
    matrices: tuple
    epsilon: tuple[float, ...] | None
    estimator: EstimatorConfig
    x0: tuple[float, ...]
    weights: tuple[float, ...] | None = None
    n_omegas: int = 10
    sample_points: int = 16
    direction: tuple[float, ...] | None = None
    resolution: int = 64
    tolerance: float = 1e-2
    output_path: str | None = None
    output_format: str | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.matrices[0])

    @property
    def rank(self) -> int:
        return len(self.matrices)


def _merge_defaults(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a table")
    merged = {}
    for section, value in doc.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"{section!r} must be a table")
        for key in value:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section, defaults in SCHEMA.items():
        merged[section] = {**defaults, **doc.get(section, {})}
    return merged


def _parse_matrices(action: dict) -> tuple:
    if (action["matrices"] is None) == (action["model"] is None):
        raise ConfigError("give exactly one of action.matrices and action.model")
    if action["model"] is not None:
        if action["model"] not in MODELS:
            raise ConfigError(f"unknown model {action['model']!r}; choose from {sorted(MODELS)}")
        return MODELS[action["model"]]
    mats = action["matrices"]
    if not isinstance(mats, list) or not mats:
        raise ConfigError("action.matrices must be a non-empty list of square integer matrices")
    for m in mats:
        if not isinstance(m, list) or not m or not all(isinstance(row, list) for row in m):
            raise ConfigError("action.matrices must be a list of matrices (lists of rows)")
        for row in m:
            if not all(_is_int(v) for v in row):
                raise NotIntegerMatrix("action.matrices entries must be integers")
            if len(row) != len(m):
                raise ConfigError("action.matrices must be square")
    return tuple(tuple(tuple(row) for row in m) for m in mats)


def parse_config(doc: dict, seed_override: int | None = None, out_override: str | None = None) -> RunConfig:
    c = _merge_defaults(doc)
    matrices = _parse_matrices(c["action"])
    d, k = len(matrices[0]), len(matrices)

    epsilon = None
    if c["action"]["epsilon"] is not None:
        epsilon = tuple(_real_list("action.epsilon", c["action"]["epsilon"], d))

    run = c["run"]
    seed = run["seed"] if seed_override is None else seed_override
    n_steps = _int_in("run.n_steps", run["n_steps"], 2, 10**8)
    estimator = EstimatorConfig(
        n_steps=n_steps,
        burn_in=_int_in("run.burn_in", run["burn_in"], 0, n_steps - 1),
        reorth_period=_int_in("run.reorth_period", run["reorth_period"], 1, 1000),
        grouping_epsilon=_positive("run.grouping_epsilon", run["grouping_epsilon"]),
        seed=_int_in("run.seed", seed, 0, 2**63 - 1),
    )
    if run["x0"] is None:
        x0 = tuple(float(v) for v in np.random.default_rng(estimator.seed).random(d))
    else:
        x0 = tuple(_real_list("run.x0", run["x0"], d))
        if not all(0 <= v < 1 for v in x0):
            raise ConfigError("run.x0 coordinates must lie in [0, 1)")

    rnd = c["random"]
    weights = None
    if rnd["weights"] is not None:
        weights = tuple(_real_list("random.weights", rnd["weights"], k))

    direction = None
    if c["direction"]["v"] is not None:
        v = np.array(_real_list("direction.v", c["direction"]["v"], k))
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ConfigError("direction.v must be nonzero")
        direction = tuple(float(x) for x in v / norm)

    tol = _positive("check.tolerance", c["check"]["tolerance"])
    out = c["output"]
    if out["format"] not in (None, "json", "csv"):
        raise ConfigError("output.format must be 'json' or 'csv'")
    path = out_override if out_override is not None else out["path"]
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path must be a string")

    return RunConfig(
        matrices=matrices, epsilon=epsilon, estimator=estimator, x0=x0, weights=weights,
        n_omegas=_int_in("random.n_omegas", rnd["n_omegas"], 1, 10**4),
        sample_points=_int_in("random.sample_points", rnd["sample_points"], 1, 10**5),
        direction=direction,
        resolution=_int_in("sweep.resolution", c["sweep"]["resolution"], 8, 10**6),
        tolerance=tol, output_path=path, output_format=out["format"], raw=c,
    )


def load_config(path: str | Path, seed_override: int | None = None,
                out_override: str | None = None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(doc, seed_override, out_override)

"""Experiment configuration: TOML parsing, validation, round-trip printing."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ParseError, RangeError, UnknownKey

DEFAULT_MATRIX = ((5, 2), (2, 1))


@dataclass(frozen=True)
class ExperimentConfig:
    t: float = 0.1
    matrix: tuple = DEFAULT_MATRIX
    n0: int = 3
    epsilon: float = 0.05
    theta0: float = 0.45
    seed: int = 0
    threads: int = 1
    out_dir: str = "out"
    # experiment knobs
    verify_grid: int = 512
    basin_shape: tuple = (64, 64, 17)
    basin_n: int = 5000
    basin_delta: float = 0.05
    lyapunov_n: int = 1_000_000
    gibbs_n: int = 2000
    gibbs_samples: int = 400
    coverage_depth: int = 12
    coverage_grid: tuple = (16, 16, 8)
    coverage_budget: int = 10_000_000
    mixing_nmax: int = 64
    mixing_samples: int = 10_000
    dichotomy_samples: int = 10_000
    consistency_samples: int = 1000
    eta: float = 0.02
    which_torus: int = 0


_RANGES = {
    "t": lambda v: 0.0 < v <= 0.2,
    "n0": lambda v: 1 <= v <= 8,
    "epsilon": lambda v: 0.0 < v < 0.1,
    "theta0": lambda v: 0.0 < v < 0.5,
    "seed": lambda v: v >= 0,
    "threads": lambda v: 1 <= v <= 256,
    "verify_grid": lambda v: 16 <= v <= 4096,
    "basin_n": lambda v: v >= 1,
    "basin_delta": lambda v: 0.0 < v < 0.25,
    "lyapunov_n": lambda v: v >= 1,
    "gibbs_n": lambda v: v >= 1,
    "gibbs_samples": lambda v: v >= 2,
    "coverage_depth": lambda v: 0 <= v <= 64,
    "coverage_budget": lambda v: v >= 1,
    "mixing_nmax": lambda v: v >= 1,
    "mixing_samples": lambda v: v >= 1,
    "dichotomy_samples": lambda v: v >= 1,
    "consistency_samples": lambda v: v >= 2,
    "eta": lambda v: 0.0 <= v < 0.05,
    "which_torus": lambda v: v in (0, 1),
}

_TUPLE_FIELDS = {"matrix": 2, "basin_shape": 3, "coverage_grid": 3}

_INT_FIELDS = {
    "n0", "seed", "threads", "verify_grid", "basin_n", "lyapunov_n",
    "gibbs_n", "gibbs_samples", "coverage_depth", "coverage_budget",
    "mixing_nmax", "mixing_samples", "dichotomy_samples",
    "consistency_samples", "which_torus",
}


def _nested_tuple(v):
    if isinstance(v, (list, tuple)):
        return tuple(_nested_tuple(x) for x in v)
    return v


def config_from_dict(data: dict) -> ExperimentConfig:
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    out = {}
    for key, val in data.items():
        if key not in names:
            raise UnknownKey(f"unknown config key {key!r}")
        if key in _TUPLE_FIELDS:
            val = _nested_tuple(val)
            if len(val) != _TUPLE_FIELDS[key]:
                raise RangeError(f"{key}: expected {_TUPLE_FIELDS[key]} entries")
        elif key in _INT_FIELDS:
            if not isinstance(val, int) or isinstance(val, bool):
                raise RangeError(f"{key}: expected an integer, got {val!r}")
        elif key != "out_dir":
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise RangeError(f"{key}: expected a number, got {val!r}")
            val = float(val)
        check = _RANGES.get(key)
        if check is not None and not check(val):
            raise RangeError(f"{key}: value {val!r} out of range")
        out[key] = val
    return ExperimentConfig(**out)


def parse_config(path: str) -> ExperimentConfig:
    with open(path, "rb") as fh:
        text = fh.read()
    try:
        data = tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def print_config(cfg: ExperimentConfig) -> str:
    """Render a config as TOML text; parse_config inverts this exactly."""
    lines = []
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, str):
            lines.append(f'{f.name} = "{v}"')
        elif isinstance(v, tuple):
            lines.append(f"{f.name} = {list(map(list, v)) if isinstance(v[0], tuple) else list(v)}")
        else:
            lines.append(f"{f.name} = {v!r}")
    return "\n".join(lines) + "\n"

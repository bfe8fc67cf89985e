"""Flat ``key = value`` configuration files.

Recognized keys::

    preset = orl | eyaleb | coil20 | mnist    (sets d and delta; explicit keys win)
    k, d, delta, gamma, eigen_order, seed
    kmeans.restarts, kmeans.max_iters, kmeans.tol
    solver.default.lambda, solver.default.id
    solver.<layer>.lambda, solver.<layer>.id, solver.<layer>.<other>

``#`` starts a comment. Layers without a ``solver.<layer>`` section use the
default solver record.
"""

from __future__ import annotations

import re

from .datamodel import PipelineConfig, SolverParams
from .errors import ConfigError, MLGError
from .pipeline import PRESETS

_SOLVER_KEY = re.compile(r"solver\.(default|\d+)\.([A-Za-z_][\w.]*)")

_CASTS = {
    "k": int,
    "d": int,
    "delta": float,
    "gamma": float,
    "eigen_order": str,
    "seed": int,
    "kmeans.restarts": int,
    "kmeans.max_iters": int,
    "kmeans.tol": float,
}

_FIELDS = {
    "seed": "rng_seed",
    "kmeans.restarts": "kmeans_restarts",
    "kmeans.max_iters": "kmeans_max_iters",
    "kmeans.tol": "kmeans_tol",
}


def parse_text(text: str, source: str = "<config>") -> dict:
    """Split a config file into an ordered ``{key: raw value}`` mapping."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _solver_record(fields: dict) -> SolverParams:
    fields = dict(fields)
    solver_id = fields.pop("id", "least_squares_reference")
    try:
        lam = float(fields.pop("lambda", 1.0))
    except ValueError:
        raise ConfigError("solver lambda must be a number") from None
    return SolverParams(solver_id, lam, tuple(sorted(fields.items())))


def build_config(raw: dict, overrides: dict | None = None) -> PipelineConfig:
    """Turn raw key/value pairs (plus CLI overrides) into a :class:`PipelineConfig`."""
    raw = dict(raw)
    raw.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    values = {}
    preset = raw.pop("preset", None)
    if preset is not None:
        if preset.lower() not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset.lower()])
    solvers = {}
    for key, value in raw.items():
        m = _SOLVER_KEY.fullmatch(key)
        if m:
            solvers.setdefault(m.group(1), {})[m.group(2)] = value
            continue
        if key not in _CASTS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[_FIELDS.get(key, key)] = _CASTS[key](value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    for req in ("k", "d"):
        if req not in values:
            raise ConfigError(f"missing required setting {req!r}")
    try:
        default = _solver_record(solvers.pop("default", {}))
        per_layer = {int(layer): _solver_record(f) for layer, f in solvers.items()}
        if per_layer:
            top = max(per_layer)
            records = tuple(per_layer.get(v, default) for v in range(top + 1)) + (default,)
        else:
            records = (default,)
        return PipelineConfig(solver_params=records, **values)
    except ConfigError:
        raise
    except MLGError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    raw = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = parse_text(fh.read(), str(path))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(raw, overrides)

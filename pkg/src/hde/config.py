"""Flat ``key = value`` run configuration.

One pair per line; ``#`` starts a comment. Unknown keys, duplicates,
malformed values and out-of-range values are rejected with the offending line
number.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

from hde.errors import ConfigError
from hde.model import model_names

__all__ = ["RunConfig", "parse_config", "serialize_config", "validate_config", "with_overrides",
           "parse_int_list"]


@dataclass(frozen=True)
class RunConfig:
    model: str | None = None
    theta1: float | None = None
    theta2: float | None = None
    theta1_min: float = 0.1
    theta1_max: float = 10.0
    theta2_min: float = 0.1
    theta2_max: float = 10.0
    tau: float = 0.0
    alpha: float = 0.25
    n: int | None = None
    n_list: tuple[int, ...] | None = None
    gamma: float = 0.6
    h: float | None = None
    refine: int = 10
    replications: int = 300
    seed: int = 0
    ci_level: float = 0.95
    tol: float = 1e-8
    min_pairs: int = 30
    jobs: int = 1
    input: str | None = None
    output: str | None = None
    summary: str | None = None


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        f = float(text)
        if not f.is_integer():
            raise ValueError(f"{text!r} is not an integer") from None
        return int(f)


def _parse_float(text: str) -> float:
    return float(text)


def parse_int_list(text: str) -> tuple[int, ...]:
    items = [s.strip() for s in text.replace(";", ",").split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_parse_int(s) for s in items)


_FLOAT = {"theta1", "theta2", "theta1_min", "theta1_max", "theta2_min", "theta2_max",
          "tau", "alpha", "gamma", "h", "ci_level", "tol"}
_INT = {"n", "refine", "replications", "seed", "min_pairs", "jobs"}
_STR = {"model", "input", "output", "summary"}
_PARSERS = {**{k: _parse_float for k in _FLOAT}, **{k: _parse_int for k in _INT},
            **{k: str for k in _STR}, "n_list": parse_int_list}
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def _checks(cfg: RunConfig):
    """Yield ``(keys, message)`` for every violated constraint."""
    def fin(v):
        return v is None or math.isfinite(v)

    if cfg.model is not None and cfg.model not in model_names():
        yield ("model",), f"unknown model {cfg.model!r}; expected one of {', '.join(model_names())}"
    if not 0.0 < cfg.alpha < 0.5:
        yield ("alpha",), f"alpha must lie in (0, 0.5), got {cfg.alpha!r}"
    if not 0.5 < cfg.gamma < 1.0:
        yield ("gamma",), f"gamma must lie in (0.5, 1), got {cfg.gamma!r}"
    if not 0.0 < cfg.ci_level < 1.0:
        yield ("ci_level",), f"ci_level must lie in (0, 1), got {cfg.ci_level!r}"
    if cfg.h is not None and not 0.0 < cfg.h < 1.0:
        yield ("h",), f"h must lie in (0, 1), got {cfg.h!r}"
    if not (cfg.tol > 0 and math.isfinite(cfg.tol)):
        yield ("tol",), "tol must be positive"
    for key in ("refine", "replications", "min_pairs", "jobs"):
        if getattr(cfg, key) < 1:
            yield (key,), f"{key} must be >= 1"
    if cfg.n is not None and cfg.n < 1:
        yield ("n",), "n must be >= 1"
    if cfg.n_list is not None and min(cfg.n_list) < 1:
        yield ("n_list",), "every n in n_list must be >= 1"
    if not 0 <= cfg.seed < 2 ** 64:
        yield ("seed",), "seed must be an unsigned 64-bit integer"
    if math.isnan(cfg.tau) or cfg.tau == math.inf:
        yield ("tau",), "tau must be a real number or -inf"
    for key in ("theta1", "theta2", "theta1_min", "theta1_max", "theta2_min", "theta2_max"):
        if not fin(getattr(cfg, key)):
            yield (key,), f"{key} must be finite"
    for i in (1, 2):
        lo, hi = getattr(cfg, f"theta{i}_min"), getattr(cfg, f"theta{i}_max")
        if not lo < hi:
            yield (f"theta{i}_min", f"theta{i}_max"), f"theta{i}_min must be < theta{i}_max"
            continue
        val = getattr(cfg, f"theta{i}")
        if val is not None and not lo < val < hi:
            yield ((f"theta{i}", f"theta{i}_min", f"theta{i}_max"),
                   f"theta{i}={val!r} must lie inside ({lo}, {hi})")


def validate_config(cfg: RunConfig, lines: dict[str, int] | None = None) -> RunConfig:
    for keys, message in _checks(cfg):
        where = [lines[k] for k in keys if lines and k in lines]
        raise ConfigError(message, max(where) if where else None)
    return cfg


def parse_config(text: str) -> RunConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"malformed value for {key!r}: {exc}", lineno) from None
        lines[key] = lineno
    return validate_config(RunConfig(**values), lines)


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is not None:
            out.append(f"{f.name} = {_format(value)}")
    return "\n".join(out) + "\n"


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    """Apply non-None overrides and re-validate."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return validate_config(dataclasses.replace(cfg, **changes))

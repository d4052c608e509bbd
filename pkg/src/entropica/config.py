"""Run configuration with layered sources.

Precedence, highest first: command-line flag, ``ENTROPICA_*`` environment
variable, JSON config file, built-in default.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Mapping

__all__ = ["RunConfig", "ConfigError", "ENV_VARS", "resolve_config"]

OUTPUT_FORMATS = ("text", "json", "csv")

# environment variable -> RunConfig field
ENV_VARS = {
    "ENTROPICA_GRID_POINTS": "grid_points",
    "ENTROPICA_TRUNCATION_SIGMAS": "truncation_sigmas",
    "ENTROPICA_TOL": "tolerance_nats",
    "ENTROPICA_BA_GAP": "ba_gap_threshold",
    "ENTROPICA_BA_MAX_ITERATIONS": "ba_max_iterations",
    "ENTROPICA_SEED": "seed",
    "ENTROPICA_FORMAT": "output_format",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    grid_points: int = 2**14
    truncation_sigmas: float = 10.0
    tolerance_nats: float = 1e-3
    ba_gap_threshold: float = 1e-6
    ba_max_iterations: int = 100_000
    seed: int = 0
    output_format: str = "text"

    def __post_init__(self):
        gp = self.grid_points
        if gp < 2**10 or gp & (gp - 1):
            raise ConfigError(f"grid_points must be a power of two >= 1024, got {gp}")
        if not self.truncation_sigmas >= 4:
            raise ConfigError(f"truncation_sigmas must be >= 4, got {self.truncation_sigmas}")
        if not self.tolerance_nats > 0:
            raise ConfigError("tolerance_nats must be positive")
        if not self.ba_gap_threshold > 0:
            raise ConfigError("ba_gap_threshold must be positive")
        if self.ba_max_iterations < 1:
            raise ConfigError("ba_max_iterations must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {OUTPUT_FORMATS}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        return cls(**_coerce(d, "config"))


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str}


def _coerce(values: Mapping, source: str) -> dict:
    out = {}
    for key, raw in values.items():
        if key not in _TYPES:
            raise ConfigError(f"{source}: unknown setting {key!r}")
        cast = _CASTS[_TYPES[key]]
        try:
            if cast is int and isinstance(raw, str):
                val = int(float(raw)) if "e" in raw.lower() else int(raw)
            else:
                val = cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: bad value for {key}: {raw!r}") from exc
        if cast is int and isinstance(raw, float) and raw != int(raw):
            raise ConfigError(f"{source}: {key} must be an integer, got {raw!r}")
        out[key] = val
    return out


def _from_file(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return _coerce(data, str(path))


def _from_env(environ: Mapping[str, str]) -> dict:
    return _coerce({field: environ[var] for var, field in ENV_VARS.items() if var in environ}, "environment")


def resolve_config(
    flags: Mapping | None = None, config_file: str | Path | None = None, environ: Mapping[str, str] | None = None
) -> RunConfig:
    """Merge defaults, file, environment and flags (``None`` flags are ignored)."""
    merged: dict = {}
    if config_file is not None:
        merged.update(_from_file(config_file))
    merged.update(_from_env(os.environ if environ is None else environ))
    merged.update(_coerce({k: v for k, v in (flags or {}).items() if v is not None}, "command line"))
    return RunConfig(**merged)

"""Run configuration: ``key = value`` files merged with command-line flags."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Tuple

from ..errors import InvalidArgument

__all__ = ["ConfigError", "RunConfig", "PRESETS", "parse_config", "parse_config_text", "parse_float_list"]

#: Purcell factors of the platforms named by the presets.
PRESETS = {"flux-qubit": 32.0, "diamond": 2.6}


class ConfigError(InvalidArgument):
    """Invalid configuration file or flag; the CLI exits with status 2."""


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run; ``None`` means "use the command's default"."""

    sigma: Optional[Tuple[float, ...]] = None
    gamma_ratio: Optional[Tuple[float, ...]] = None
    purcell: Optional[Tuple[float, ...]] = None
    alpha: Optional[float] = None
    eta: float = 1.0
    stages: Optional[int] = None
    grid_points: Optional[int] = None
    grid_halfwidth: Optional[float] = None
    preset: Optional[str] = None
    allow_unconverged: bool = False
    quick: bool = False
    mutate_kernel: float = 1.0

    def __post_init__(self):
        for name in ("sigma", "purcell"):
            vals = getattr(self, name)
            if vals is not None and any(not (v > 0 and math.isfinite(v)) for v in vals):
                raise ConfigError(f"{name} values must be positive and finite, got {vals}")
        if self.gamma_ratio is not None and any(not (0 <= v < math.inf) for v in self.gamma_ratio):
            raise ConfigError(f"gamma_ratio values must be >= 0, got {self.gamma_ratio}")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.eta <= 1:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if self.stages is not None and self.stages < 0:
            raise ConfigError(f"stages must be >= 0, got {self.stages}")
        if self.grid_points is not None and (self.grid_points < 3 or self.grid_points % 2 == 0):
            raise ConfigError(f"grid_points must be odd and >= 3, got {self.grid_points}")
        if self.grid_halfwidth is not None and not self.grid_halfwidth > 0:
            raise ConfigError(f"grid_halfwidth must be positive, got {self.grid_halfwidth}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if not self.mutate_kernel > 0:
            raise ConfigError("mutate_kernel must be positive")

    def gamma_ratios(self, default):
        """Loss ratios to sweep: explicit values, else the preset, else ``default``."""
        if self.gamma_ratio is not None:
            return tuple(self.gamma_ratio)
        if self.purcell is not None:
            return tuple(1.0 / p for p in self.purcell)
        if self.preset is not None:
            return (1.0 / PRESETS[self.preset],)
        return tuple(default)

    def sigmas(self, default):
        return tuple(self.sigma) if self.sigma is not None else tuple(default)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return _build(dict(d), source="metadata")


_LIST_KEYS = {"sigma", "gamma_ratio", "purcell"}
_FLOAT_KEYS = {"alpha", "eta", "grid_halfwidth", "mutate_kernel"}
_INT_KEYS = {"stages", "grid_points"}
_BOOL_KEYS = {"allow_unconverged", "quick"}
_KEYS = {f.name for f in fields(RunConfig)}


def parse_float_list(text) -> Tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    if isinstance(text, (int, float)):
        return (float(text),)
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _coerce(key, value):
    if value is None:
        return None
    if key in _LIST_KEYS:
        return parse_float_list(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        f = float(value)
        if f != int(f):
            raise ValueError(f"{value!r} is not an integer")
        return int(f)
    if key in _BOOL_KEYS:
        if isinstance(value, bool):
            return value
        low = str(value).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{value!r} is not a boolean")
    return str(value)


def _build(values: dict, source: str) -> RunConfig:
    unknown = set(values) - _KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {sorted(unknown)}")
    kwargs = {}
    for key, value in values.items():
        try:
            kwargs[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key}: {exc}") from None
    return RunConfig(**kwargs)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into raw strings; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def parse_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Merge a config file (optional) with flag overrides; flags win.

    ``overrides`` entries whose value is ``None`` are treated as "not given".
    """
    values = {}
    source = "<flags>"
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values = parse_config_text(fh.read(), str(path))
        source = str(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return _build(values, source)

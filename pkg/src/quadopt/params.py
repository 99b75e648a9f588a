"""Physical and numerical parameters for the quadratically coupled cavity.

All frequencies and rates are expressed in units of the mechanical
frequency; ``omega_m`` is kept as an explicit field so that dimensionful
inputs also work.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

RHS_VARIANTS = ("closed", "composed")


@dataclass(frozen=True)
class SystemParams:
    """The eight physical rates/strengths of the driven cavity-membrane system.

    ``g_opt`` may be negative (membrane at a node rather than an antinode);
    only :func:`stability_margin` constrains it.
    """

    delta_c: float = 1.0
    omega_m: float = 1.0
    g_opt: float = 0.0
    rabi: float = 0.0
    gamma_a: float = 0.0
    gamma_b: float = 0.0
    nbar_a: float = 0.0
    nbar_b: float = 0.0

    def replace(self, **changes: float) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SimConfig:
    """Time grid, tolerances and RHS choice for one moment-equation run.

    ``initial_state`` is either the string ``"vacuum"`` or a
    :class:`quadopt.moments.MomentState`.
    """

    t_end: float = 50.0
    n_samples: int = 2001
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    rhs_variant: str = "closed"
    initial_state: Any = "vacuum"
    # diverging closures take ever smaller steps; presets need about 2e4
    max_steps: int = 1_000_000

    def replace(self, **changes: Any) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_samples)

    def as_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        if not isinstance(self.initial_state, str):
            d["initial_state"] = "custom"
        return d


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    value: Any = None

    def __str__(self) -> str:
        return f"{self.field}: violates '{self.rule}' (got {self.value!r})"


def validate(params: SystemParams) -> list[Violation]:
    """Return every invariant violation of ``params``; an empty list means ok."""
    out = []
    for name in ("delta_c", "omega_m", "g_opt", "rabi", "gamma_a", "gamma_b", "nbar_a", "nbar_b"):
        value = getattr(params, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            out.append(Violation(name, f"{name} finite", value))
    if not out:
        if not params.omega_m > 0:
            out.append(Violation("omega_m", "omega_m > 0", params.omega_m))
        for name in ("gamma_a", "gamma_b", "nbar_a", "nbar_b"):
            value = getattr(params, name)
            if not value >= 0:
                out.append(Violation(name, f"{name} ≥ 0", value))
    return out


def validate_config(cfg: SimConfig) -> list[Violation]:
    out = []
    if not (math.isfinite(cfg.t_end) and cfg.t_end > 0):
        out.append(Violation("t_end", "t_end > 0", cfg.t_end))
    if int(cfg.n_samples) != cfg.n_samples or cfg.n_samples < 2:
        out.append(Violation("n_samples", "n_samples ≥ 2", cfg.n_samples))
    for name in ("rel_tol", "abs_tol"):
        value = getattr(cfg, name)
        if not value > 0:
            out.append(Violation(name, f"{name} > 0", value))
    if int(cfg.max_steps) != cfg.max_steps or cfg.max_steps < 1:
        out.append(Violation("max_steps", "max_steps ≥ 1", cfg.max_steps))
    if cfg.rhs_variant not in RHS_VARIANTS:
        out.append(Violation("rhs_variant", f"rhs_variant in {RHS_VARIANTS}", cfg.rhs_variant))
    if isinstance(cfg.initial_state, str) and cfg.initial_state != "vacuum":
        out.append(Violation("initial_state", "initial_state is 'vacuum' or a MomentState", cfg.initial_state))
    return out


def stability_margin(params: SystemParams, s: float) -> float:
    """``omega_m + 4 s g_opt`` for photon number ``s``; the membrane is stable iff > 0."""
    if s < 0:
        raise ValueError(f"photon number must be non-negative, got {s}")
    return params.omega_m + 4.0 * s * params.g_opt


# --- plain-text config files -------------------------------------------------

PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams))
CONFIG_FIELDS = ("t_end", "n_samples", "rel_tol", "abs_tol", "rhs_variant", "initial_state", "max_steps")


class ConfigError(ValueError):
    """Raised for malformed config files or invariant violations."""

    def __init__(self, messages: list[str] | str):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def _coerce(key: str, raw: str) -> Any:
    if key in ("rhs_variant", "initial_state"):
        return raw
    if key in ("n_samples", "max_steps"):
        try:
            return int(raw)
        except ValueError:
            value = float(raw)
            if not value.is_integer():
                raise
            return int(value)
    return float(raw)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines with ``#`` comments into a dict of typed values."""
    values: dict[str, Any] = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_FIELDS and key not in CONFIG_FIELDS:
            errors.append(f"{source}:{lineno}: unknown key '{key}'")
            continue
        try:
            values[key] = _coerce(key, raw)
        except ValueError:
            errors.append(f"{source}:{lineno}: bad value for '{key}': {raw!r}")
    if errors:
        raise ConfigError(errors)
    return values


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    return parse_config_text(path.read_text(), source=str(path))


def build(values: dict[str, Any], params: SystemParams | None = None,
          cfg: SimConfig | None = None) -> tuple[SystemParams, SimConfig]:
    """Overlay ``values`` on ``params``/``cfg`` (defaults if None) and validate."""
    params = params or SystemParams()
    cfg = cfg or SimConfig()
    params = params.replace(**{k: float(v) for k, v in values.items() if k in PARAM_FIELDS})
    cfg = cfg.replace(**{k: v for k, v in values.items() if k in CONFIG_FIELDS})
    problems = [str(v) for v in validate(params) + validate_config(cfg)]
    if problems:
        raise ConfigError(problems)
    return params, cfg

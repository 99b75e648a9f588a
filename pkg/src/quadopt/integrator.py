"""Explicit Runge-Kutta time stepping on a fixed output grid.

Complex states are integrated as interleaved real vectors. Output samples are
hit exactly by shortening the step that would overshoot them, so there is no
interpolation anywhere and runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

ADAPTIVE = "adaptive_embedded"
FIXED = "fixed_rk4"

# Dormand-Prince 5(4), first-same-as-last
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0],
])
_B5 = _A[6]
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
FACTOR_MIN = 0.2
FACTOR_MAX = 5.0


@dataclass(frozen=True)
class StepperConfig:
    mode: str = ADAPTIVE
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 1.0
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.mode not in (ADAPTIVE, FIXED):
            raise ValueError(f"unknown stepper mode {self.mode!r}")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass
class Trajectory:
    """Samples of an integration on ``times``.

    ``status`` is ``"ok"`` or the reason the run stopped early
    (``"step_underflow"``, ``"non_finite"``, ``"max_steps"``); on early
    exit ``times``/``states`` hold only the samples reached.
    """

    times: np.ndarray
    states: np.ndarray
    status: str = "ok"
    message: str = ""
    stats: dict[str, int] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def __len__(self) -> int:
        return len(self.times)


def check_grid(t_grid) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if not np.all(np.isfinite(t_grid)) or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be finite and strictly increasing")
    return t_grid


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], y0, t_grid,
              cfg: StepperConfig = StepperConfig(),
              observe: Callable[[float, np.ndarray], Any] | None = None) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` and sample at every point of ``t_grid``.

    ``y0`` may be real or complex; ``rhs`` receives and returns arrays of the
    same dtype and shape as ``y0``. If ``observe`` is given, each sample stores
    ``observe(t, y)`` instead of the full state.
    """
    t_grid = check_grid(t_grid)
    y0 = np.asarray(y0)
    is_complex = np.iscomplexobj(y0)
    shape = y0.shape
    y = np.array(y0, dtype=complex if is_complex else float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state is not finite")

    if is_complex:
        def f(t, x):
            return np.asarray(rhs(t, x.view(complex).reshape(shape)), dtype=complex).ravel().view(float)
        x = y.view(float).copy()
    else:
        def f(t, x):
            return np.asarray(rhs(t, x.reshape(shape)), dtype=float).ravel()
        x = y.copy()

    def sample(t, xv):
        state = xv.view(complex).reshape(shape) if is_complex else xv.reshape(shape)
        return observe(t, state.copy()) if observe is not None else state.copy()

    samples = [sample(0.0, x)]
    stats = {"steps": 0, "rejections": 0, "rhs_evals": 0}
    stepper = _adaptive if cfg.mode == ADAPTIVE else _fixed
    # overflow is caught and reported through the status
    with np.errstate(over="ignore", invalid="ignore"):
        status, message, n_done = stepper(f, x, t_grid, cfg, stats, samples, sample)
    states = np.asarray(samples) if observe is None else samples
    return Trajectory(times=t_grid[:n_done].copy(), states=states, status=status,
                      message=message, stats=stats)


def _adaptive(f, x, t_grid, cfg, stats, samples, sample):
    n = x.size
    K = np.empty((7, n))
    t = 0.0
    K[0] = f(t, x)
    stats["rhs_evals"] += 1
    if not np.all(np.isfinite(K[0])):
        return "non_finite", "rhs not finite at t=0", 1
    h = cfg.h_init
    atol, rtol = cfg.abs_tol, cfg.rel_tol
    for k, target in enumerate(t_grid[1:], start=1):
        while t < target:
            if stats["steps"] >= cfg.max_steps:
                return "max_steps", f"max_steps={cfg.max_steps} exceeded at t={float(t)!r}", k
            remaining = target - t
            landing = h >= remaining
            step = remaining if landing else h
            for i in range(1, 7):
                K[i] = f(t + _C[i] * step, x + step * (_A[i, :i] @ K[:i]))
            stats["rhs_evals"] += 6
            x_new = x + step * (_B5[:6] @ K[:6])
            err_vec = step * (_E @ K)
            scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
            err = float(np.max(np.abs(err_vec) / scale))
            if not (math.isfinite(err) and np.all(np.isfinite(K[6]))):
                return "non_finite", f"non-finite state near t={float(t)!r}", k
            if err == 0.0:
                factor = FACTOR_MAX
            else:
                factor = min(FACTOR_MAX, max(FACTOR_MIN, SAFETY * err ** -0.2))
            if err <= 1.0:
                t = target if landing else t + step
                x = x_new
                K[0] = K[6]
                stats["steps"] += 1
                h_next = min(step * factor, cfg.h_max)
                # a step cut short to land on the grid should not shrink h
                h = max(h, h_next) if landing else h_next
            else:
                stats["rejections"] += 1
                h = step * factor
                if h < cfg.h_min:
                    return "step_underflow", f"step size {float(h)!r} < h_min at t={float(t)!r}", k
        samples.append(sample(t, x))
    return "ok", "", len(t_grid)


def _fixed(f, x, t_grid, cfg, stats, samples, sample):
    t = 0.0
    for k, target in enumerate(t_grid[1:], start=1):
        n_sub = max(1, math.ceil((target - t) / cfg.h_init))
        if stats["steps"] + n_sub > cfg.max_steps:
            return "max_steps", f"max_steps={cfg.max_steps} exceeded at t={float(t)!r}", k
        h = (target - t) / n_sub
        for i in range(n_sub):
            ts = t + i * h
            k1 = f(ts, x)
            k2 = f(ts + 0.5 * h, x + 0.5 * h * k1)
            k3 = f(ts + 0.5 * h, x + 0.5 * h * k2)
            k4 = f(ts + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        stats["steps"] += n_sub
        stats["rhs_evals"] += 4 * n_sub
        t = target
        if not np.all(np.isfinite(x)):
            return "non_finite", f"non-finite state at t={float(t)!r}", k
        samples.append(sample(t, x))
    return "ok", "", len(t_grid)

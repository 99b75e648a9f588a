"""Named parameter sets for each figure panel plus machine-checkable claims.

Every preset starts from vacuum and runs on the default grid
(t in [0, 50]/omega_m, 2001 samples). Claims are pure functions of
observable tables, so they can be replayed from CSV output alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .correlations import observables_series
from .integrator import Trajectory
from .params import SimConfig, SystemParams, validate
from .simulation import run_moments

Table = dict[str, np.ndarray]


@dataclass(frozen=True)
class ClaimResult:
    claim: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""


@dataclass(frozen=True)
class Claim:
    """A qualitative statement about one preset, with an explicit tolerance.

    ``check(table, refs)`` receives the preset's observables table and the
    tables of the presets named in ``requires``.
    """

    name: str
    description: str
    check: Callable[[Table, dict[str, Table]], ClaimResult]
    requires: tuple[str, ...] = ()


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    params: SystemParams
    sim: SimConfig = SimConfig()
    claims: tuple[Claim, ...] = ()


# --- claims ---------------------------------------------------------------------

def _defined(x: np.ndarray) -> np.ndarray:
    return x[np.isfinite(x)]


def _far_detuned_suppression(table: Table, refs: dict[str, Table]) -> ClaimResult:
    peak, ref_peak = float(np.max(table["n_a"])), float(np.max(refs["fig1b"]["n_a"]))
    return ClaimResult("far_detuned_suppression", peak < ref_peak, peak, ref_peak,
                       "max n_a must stay below the max n_a of fig1b")


def _thermal_saturation(nbar_b: float, omega_m: float = 1.0, frac: float = 0.01):
    def check(table: Table, refs: dict[str, Table]) -> ClaimResult:
        t, nb = table["t"], table["n_b"]
        slope = abs(float(np.gradient(nb[-3:], t[-3:], edge_order=2)[-1]))
        limit = frac * omega_m * nbar_b
        return ClaimResult("thermal_saturation", slope < limit, slope, limit,
                           "|d n_b/dt| at t_end must be below 1% of omega_m * nbar_b")
    return check


def _never_sub_poissonian(table: Table, refs: dict[str, Table]) -> ClaimResult:
    g2 = _defined(table["g2_a"])
    low = float(g2.min()) if g2.size else float("nan")
    return ClaimResult("never_sub_poissonian", bool(g2.size) and low >= 0.95, low, 0.95,
                       "min g2_a over defined times must be >= 1 - 0.05")


def _photon_blockade(table: Table, refs: dict[str, Table]) -> ClaimResult:
    g2 = _defined(table["g2_a"])
    low = float(g2.min()) if g2.size else float("nan")
    return ClaimResult("photon_blockade", bool(g2.size) and low < 0.5, low, 0.5,
                       "g2_a must drop below 0.5 at some defined time")


# --- presets --------------------------------------------------------------------

def _p(**kw) -> SystemParams:
    return SystemParams(omega_m=1.0, **kw)


# per-panel parameter values
_FIG1 = dict(g_opt=1.4, gamma_a=0.01, gamma_b=0.001, rabi=0.6, nbar_a=0.0, nbar_b=0.0)
_FIG2 = dict(delta_c=1.0, g_opt=1.4, gamma_b=0.001, rabi=0.4, nbar_a=0.0, nbar_b=0.0)
_FIG3 = dict(delta_c=1.0, g_opt=1.4, rabi=0.4, gamma_a=0.1, gamma_b=0.1, nbar_a=0.0)
_FIG4 = dict(g_opt=1.5, gamma_a=0.01, gamma_b=0.001, rabi=0.6, nbar_a=0.0, nbar_b=0.0)
_FIG5 = dict(delta_c=0.5, gamma_a=0.01, gamma_b=0.001, rabi=0.6, nbar_a=0.0, nbar_b=0.0)
_FIG6 = dict(delta_c=1.0, g_opt=1.4, rabi=0.4, nbar_a=0.0, nbar_b=0.0)

PRESET_PARAMS: dict[str, SystemParams] = {
    "fig1a": _p(delta_c=0.5, **_FIG1),
    "fig1b": _p(delta_c=1.0, **_FIG1),
    "fig1c": _p(delta_c=2.0, **_FIG1),
    "fig1d": _p(delta_c=5.0, **_FIG1),
    "fig2a": _p(gamma_a=0.01, **_FIG2),
    "fig2b": _p(gamma_a=0.1, **_FIG2),
    "fig3a": _p(nbar_b=0.0, **_FIG3),
    "fig3b": _p(nbar_b=2.0, **_FIG3),
    "fig4a": _p(delta_c=0.0, **_FIG4),
    "fig4b": _p(delta_c=1.3, **_FIG4),
    "fig4c": _p(delta_c=2.5, **_FIG4),
    "fig4d": _p(delta_c=4.0, **_FIG4),
    "fig5a": _p(g_opt=0.8, **_FIG5),
    "fig5b": _p(g_opt=1.7, **_FIG5),
    "fig5c": _p(g_opt=3.0, **_FIG5),
    "fig5d": _p(g_opt=5.0, **_FIG5),
    "fig6a": _p(gamma_a=0.01, gamma_b=0.001, **_FIG6),
    "fig6b": _p(gamma_a=0.1, gamma_b=0.001, **_FIG6),
    "fig6c": _p(gamma_a=0.1, gamma_b=0.1, **_FIG6),
}

PRESET_CLAIMS: dict[str, tuple[Claim, ...]] = {
    "fig1d": (Claim("far_detuned_suppression",
                    "far-detuned drive keeps the photon number below the near-sideband case",
                    _far_detuned_suppression, requires=("fig1b",)),),
    "fig3b": (Claim("thermal_saturation",
                    "thermal phonon number levels off by the end of the run",
                    _thermal_saturation(PRESET_PARAMS["fig3b"].nbar_b)),),
    "fig4d": (Claim("never_sub_poissonian",
                    "large detuning: cavity g2 never drops below the Poissonian line",
                    _never_sub_poissonian),),
    "fig6b": (Claim("photon_blockade",
                    "strong cavity decay: cavity g2 falls below 0.5",
                    _photon_blockade),),
}

PRESETS: dict[str, ScenarioPreset] = {
    name: ScenarioPreset(name, params, SimConfig(), PRESET_CLAIMS.get(name, ()))
    for name, params in PRESET_PARAMS.items()
}
assert all(not validate(p.params) for p in PRESETS.values())


def preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def describe(p: ScenarioPreset) -> str:
    q = p.params
    return (f"{p.name}: delta_c={q.delta_c:g} omega_m={q.omega_m:g} g_opt={q.g_opt:g} rabi={q.rabi:g} "
            f"gamma_a={q.gamma_a:g} gamma_b={q.gamma_b:g} nbar_a={q.nbar_a:g} nbar_b={q.nbar_b:g}")


@dataclass
class PresetRun:
    preset: ScenarioPreset
    trajectory: Trajectory
    table: Table
    claims: list[ClaimResult] = field(default_factory=list)

    @property
    def all_claims_pass(self) -> bool:
        return all(c.passed for c in self.claims)


def check_claims(p: ScenarioPreset, table: Table, refs: dict[str, Table]) -> list[ClaimResult]:
    return [c.check(table, refs) for c in p.claims]


def run_preset(name: str, rhs_variant: str = "closed",
               cache: dict[tuple[str, str], PresetRun] | None = None) -> PresetRun:
    """Integrate a preset from vacuum and evaluate its claims.

    ``cache`` (keyed by ``(name, rhs_variant)``) lets callers share runs of
    presets that other claims reference.
    """
    cache = {} if cache is None else cache
    key = (name, rhs_variant)
    if key in cache:
        return cache[key]
    p = preset(name)
    traj = run_moments(p.params, p.sim.replace(rhs_variant=rhs_variant))
    traj.meta["preset"] = name
    table = observables_series(traj)
    refs = {}
    for claim in p.claims:
        for ref in claim.requires:
            refs[ref] = run_preset(ref, rhs_variant, cache).table
    run = PresetRun(p, traj, table, check_claims(p, table, refs) if traj.ok else [])
    cache[key] = run
    return run

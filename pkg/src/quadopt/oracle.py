"""Truncated-Fock-space master equation for the driven cavity-membrane system.

The two-mode basis is |n_a> ⊗ |n_b>, ordered row-major in n_a then n_b, so
a single-mode operator ``X`` on the cavity acts as ``kron(X, I_b)``.
Operators are kept sparse; the density matrix is dense.

Dissipation uses local thermal Lindblad terms,

    Γa (n̄a + 1) D[a] + Γa n̄a D[a†] + Γb (n̄b + 1) D[b] + Γb n̄b D[b†],

with D[L]ρ = LρL† - ½{L†L, ρ}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .correlations import EPS, UNDEFINED
from .integrator import ADAPTIVE, StepperConfig, Trajectory, integrate
from .moments import SLOT_WORDS, SLOTS, MomentState
from .params import SystemParams, validate, ConfigError

DEFAULT_CUTOFFS = (10, 14)
TRACE_ABORT = 1e-6
CONVERGENCE_TOL = 1e-6


@dataclass(frozen=True)
class FockSpace:
    n_cut_a: int = DEFAULT_CUTOFFS[0]
    n_cut_b: int = DEFAULT_CUTOFFS[1]

    def __post_init__(self):
        for name in ("n_cut_a", "n_cut_b"):
            value = getattr(self, name)
            if int(value) != value or value < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {value!r}")

    @property
    def dim(self) -> int:
        return self.n_cut_a * self.n_cut_b

    def index(self, n_a: int, n_b: int) -> int:
        return n_a * self.n_cut_b + n_b


def destroy(n: int) -> sp.csr_matrix:
    """Single-mode annihilation operator with <k-1|a|k> = sqrt(k)."""
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, shape=(n, n), format="csr")


@dataclass
class OperatorSet:
    space: FockSpace
    params: SystemParams
    a: sp.csr_matrix
    ad: sp.csr_matrix
    b: sp.csr_matrix
    bd: sp.csr_matrix
    n_a: sp.csr_matrix
    n_b: sp.csr_matrix
    x2: sp.csr_matrix
    H: sp.csr_matrix
    jumps: list[tuple[float, sp.csr_matrix]] = field(default_factory=list)
    h_eff: sp.csr_matrix | None = None
    moment_ops: dict[str, sp.csr_matrix] = field(default_factory=dict)
    g2_ops: dict[str, sp.csr_matrix] = field(default_factory=dict)


def _word_operator(word: str, ops: dict[str, sp.csr_matrix]) -> sp.csr_matrix:
    out = ops[word[0]]
    for letter in word[1:]:
        out = out @ ops[letter]
    return sp.csr_matrix(out)


def build_operators(space: FockSpace, params: SystemParams) -> OperatorSet:
    """Ladder operators, Hamiltonian and dissipators on ``space``.

    H = Δc a†a + ωM b†b + g a†a (b†² + b² + 2 b†b + 1) + Ω (a† + a)
    """
    problems = validate(params)
    if problems:
        raise ConfigError([str(v) for v in problems])
    eye_a = sp.identity(space.n_cut_a, format="csr")
    eye_b = sp.identity(space.n_cut_b, format="csr")
    a = sp.kron(destroy(space.n_cut_a), eye_b, format="csr")
    b = sp.kron(eye_a, destroy(space.n_cut_b), format="csr")
    ad = sp.csr_matrix(a.conj().T)
    bd = sp.csr_matrix(b.conj().T)
    n_a = sp.csr_matrix(ad @ a)
    n_b = sp.csr_matrix(bd @ b)
    eye = sp.identity(space.dim, format="csr")
    x2 = sp.csr_matrix(bd @ bd + b @ b + 2 * n_b + eye)
    H = (params.delta_c * n_a + params.omega_m * n_b
         + params.g_opt * (n_a @ x2) + params.rabi * (ad + a))
    H = sp.csr_matrix(H, dtype=complex)

    jumps = []
    for rate, L in ((params.gamma_a * (params.nbar_a + 1), a), (params.gamma_a * params.nbar_a, ad),
                    (params.gamma_b * (params.nbar_b + 1), b), (params.gamma_b * params.nbar_b, bd)):
        if rate > 0:
            jumps.append((rate, sp.csr_matrix(L, dtype=complex)))
    h_eff = H.copy()
    for rate, L in jumps:
        h_eff = h_eff - 0.5j * rate * (L.conj().T @ L)
    h_eff = sp.csr_matrix(h_eff)

    letters = {"a": a, "A": ad, "b": b, "B": bd}
    moment_ops = {name: _word_operator(word, letters) for name, word in zip(SLOTS, SLOT_WORDS)}
    g2_ops = {
        "aa": _word_operator("AAaa", letters),
        "bb": _word_operator("BBbb", letters),
        "ab": _word_operator("ABba", letters),
    }
    return OperatorSet(space, params, a, ad, b, bd, n_a, n_b, x2, H, jumps, h_eff, moment_ops, g2_ops)


# --- dynamics ------------------------------------------------------------------

def lindblad_rhs(rho: np.ndarray, ops: OperatorSet) -> np.ndarray:
    """dρ/dt for hermitian ``rho``; the result is hermitian and traceless."""
    rho = np.asarray(rho)
    if rho.shape != (ops.space.dim, ops.space.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dimension {ops.space.dim}")
    X = ops.h_eff @ rho
    out = -1j * (X - X.conj().T)
    for rate, L in ops.jumps:
        Y = L @ rho
        out += rate * (L @ Y.conj().T)
    return out


def oracle_stepper(**overrides) -> StepperConfig:
    opts = dict(mode=ADAPTIVE, rel_tol=1e-8, abs_tol=1e-10, h_init=1e-3, h_max=1.0)
    opts.update(overrides)
    return StepperConfig(**opts)


def trace_value(rho: np.ndarray) -> complex:
    return complex(np.trace(rho))


def hermiticity_deviation(rho: np.ndarray) -> float:
    return float(np.max(np.abs(rho - rho.conj().T)))


def _expect(X: sp.csr_matrix, rho: np.ndarray) -> complex:
    # Tr(ρX) = Σ_ij ρ_ij X_ji
    return complex(X.multiply(rho.T).sum())


def exact_moments(rho: np.ndarray, ops: OperatorSet) -> MomentState:
    """All 14 moment slots as traces Tr(ρX)."""
    return MomentState([_expect(ops.moment_ops[name], rho) for name in SLOTS])


def exact_g2(rho: np.ndarray, ops: OperatorSet, eps: float = EPS) -> tuple[float, float, float]:
    """Normally ordered g2_a, g2_b, g2_ab without any decorrelation (nan below ``eps``)."""
    na = _expect(ops.n_a, rho).real
    nb = _expect(ops.n_b, rho).real
    g_a = _expect(ops.g2_ops["aa"], rho).real / na**2 if na >= eps else UNDEFINED
    g_b = _expect(ops.g2_ops["bb"], rho).real / nb**2 if nb >= eps else UNDEFINED
    g_ab = (_expect(ops.g2_ops["ab"], rho).real / (na * nb)
            if na >= eps and nb >= eps and na * nb >= eps * eps else UNDEFINED)
    return g_a, g_b, g_ab


@dataclass
class OracleSample:
    """What is kept of ρ(t) at each grid point."""

    moments: MomentState
    g2: tuple[float, float, float]
    trace: complex
    hermiticity: float
    min_diagonal: float
    rho: np.ndarray | None = None


def evolve(rho0: np.ndarray, ops: OperatorSet, t_grid, cfg: StepperConfig | None = None,
           keep_states: bool = False, eps: float = EPS) -> Trajectory:
    """Evolve ``rho0`` under the master equation, sampling :class:`OracleSample` on ``t_grid``.

    If the trace drifts by more than 1e-6 the trajectory is cut at the first
    offending sample and flagged ``"trace_drift"``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if hermiticity_deviation(rho0) > 1e-10 or abs(trace_value(rho0) - 1) > 1e-8:
        raise ValueError("rho0 must be hermitian with unit trace")
    cfg = cfg or oracle_stepper()

    def observe(t, rho):
        return OracleSample(
            moments=exact_moments(rho, ops),
            g2=exact_g2(rho, ops, eps),
            trace=trace_value(rho),
            hermiticity=hermiticity_deviation(rho),
            min_diagonal=float(np.min(np.diag(rho).real)),
            rho=rho if keep_states else None,
        )

    traj = integrate(lambda t, rho: lindblad_rhs(rho, ops), rho0, t_grid, cfg, observe=observe)
    for k, s in enumerate(traj.states):
        if abs(s.trace - 1) > TRACE_ABORT:
            traj.times = traj.times[:k]
            traj.states = traj.states[:k]
            traj.status = "trace_drift"
            traj.message = f"trace drifted by {abs(s.trace - 1):.3e} at t={traj.times[-1] if k else 0.0}"
            break
    traj.meta = {
        "params": ops.params.as_dict(),
        "cutoffs": [ops.space.n_cut_a, ops.space.n_cut_b],
        "stepper": {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
        "max_trace_drift": max((abs(s.trace - 1) for s in traj.states), default=0.0),
        "max_hermiticity": max((s.hermiticity for s in traj.states), default=0.0),
        "min_diagonal": min((s.min_diagonal for s in traj.states), default=0.0),
    }
    return traj


# --- states --------------------------------------------------------------------

def ket_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def fock_dm(space: FockSpace, n_a: int = 0, n_b: int = 0) -> np.ndarray:
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.index(n_a, n_b)] = 1.0
    return ket_dm(psi)


def vacuum_dm(space: FockSpace) -> np.ndarray:
    return fock_dm(space, 0, 0)


def thermal_populations(n: int, nbar: float) -> np.ndarray:
    """Geometric occupation of ``n`` levels with mean ``nbar``, renormalised after truncation."""
    if nbar == 0:
        p = np.zeros(n)
        p[0] = 1.0
        return p
    q = nbar / (nbar + 1.0)
    p = q ** np.arange(n)
    return p / p.sum()


def product_dm(rho_a: np.ndarray, rho_b: np.ndarray) -> np.ndarray:
    return np.kron(rho_a, rho_b)


def displaced_ket(n: int, alpha: complex) -> np.ndarray:
    """exp(α a† - α* a)|0> built by matrix exponential in an ``n``-level space."""
    a = destroy(n).toarray()
    gen = alpha * a.conj().T - np.conj(alpha) * a
    vac = np.zeros(n, dtype=complex)
    vac[0] = 1.0
    return scipy.linalg.expm(gen) @ vac


# --- runs and convergence ------------------------------------------------------

def oracle_columns(traj: Trajectory) -> dict[str, np.ndarray]:
    """Moment columns plus exact g2, same layout as the closure output table."""
    states = np.array([s.moments.values for s in traj.states]).reshape(len(traj.states), len(SLOTS))
    g2 = np.array([s.g2 for s in traj.states], dtype=float).reshape(len(traj.states), 3)
    return {"t": np.asarray(traj.times), "moments": states,
            "g2_a": g2[:, 0], "g2_b": g2[:, 1], "g2_ab": g2[:, 2]}


def run_oracle(params: SystemParams, t_grid, cutoffs: tuple[int, int] = DEFAULT_CUTOFFS,
               rho0: np.ndarray | None = None, cfg: StepperConfig | None = None) -> Trajectory:
    space = FockSpace(*cutoffs)
    ops = build_operators(space, params)
    if rho0 is None:
        rho0 = vacuum_dm(space)
    return evolve(rho0, ops, t_grid, cfg)


def convergence_report(params: SystemParams, t_grid, cutoffs: tuple[int, int] = DEFAULT_CUTOFFS,
                       bump: int = 4, cfg: StepperConfig | None = None,
                       tol: float = CONVERGENCE_TOL) -> tuple[dict[str, Any], Trajectory]:
    """Run at ``cutoffs`` and at ``cutoffs + bump``; compare n_a, n_b at the final time.

    Returns the report and the base-cutoff trajectory.
    """
    base = run_oracle(params, t_grid, cutoffs, cfg=cfg)
    bumped_cut = (cutoffs[0] + bump, cutoffs[1] + bump)
    bumped = run_oracle(params, t_grid, bumped_cut, cfg=cfg)
    report: dict[str, Any] = {
        "cutoffs_tried": [list(cutoffs), list(bumped_cut)],
        "t_end": float(np.asarray(t_grid)[-1]),
        "tolerance": tol,
        "status": [base.status, bumped.status],
    }
    if base.ok and bumped.ok:
        last_base, last_bump = base.states[-1].moments, bumped.states[-1].moments
        d_na = abs(last_bump.n_a.real - last_base.n_a.real)
        d_nb = abs(last_bump.n_b.real - last_base.n_b.real)
        report.update(delta_n_a=d_na, delta_n_b=d_nb, under_resolved=bool(d_na >= tol))
    else:
        report.update(delta_n_a=math.nan, delta_n_b=math.nan, under_resolved=True)
    report["max_trace_drift"] = max(base.meta["max_trace_drift"], bumped.meta["max_trace_drift"])
    report["max_hermiticity"] = max(base.meta["max_hermiticity"], bumped.meta["max_hermiticity"])
    return report, base

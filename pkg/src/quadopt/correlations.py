"""Equal-time second-order correlation functions from moment data.

The closure expressions evaluate the decorrelated numerators from first and
second moments only. Undefined values (population below ``eps``) are
returned as ``nan`` and written out as empty CSV fields, never as 0.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .moments import SLOT_INDEX, MomentState

EPS = 1e-9
UNDEFINED = math.nan
IMAG_TOL = 1e-10

_I = SLOT_INDEX


class Statistics(enum.Enum):
    SUB_POISSONIAN = "sub_poissonian"
    POISSONIAN = "poissonian"
    SUPER_POISSONIAN = "super_poissonian"


def _values(state) -> np.ndarray:
    return state.values if isinstance(state, MomentState) else np.asarray(state, dtype=complex)


def _real_ratio(num, den):
    value = complex(num) / complex(den)
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise ValueError(f"correlation has imaginary residue {value.imag:.3e}")
    return value.real


def g2_a(state, eps: float = EPS) -> float:
    """[2 <a†a>^2 + <a†²><a²>] / <a†a>^2, or nan if <a†a> < eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    y = _values(state)
    na = y[_I["n_a"]]
    if na.real < eps:
        return UNDEFINED
    return _real_ratio(2 * na * na + y[_I["m_adad"]] * y[_I["m_aa"]], na * na)


def g2_b(state, eps: float = EPS) -> float:
    """[2 <b†b>^2 + <b†²><b²>] / <b†b>^2, or nan if <b†b> < eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    y = _values(state)
    nb = y[_I["n_b"]]
    if nb.real < eps:
        return UNDEFINED
    return _real_ratio(2 * nb * nb + y[_I["m_bdbd"]] * y[_I["m_bb"]], nb * nb)


def g2_ab(state, eps: float = EPS) -> float:
    """[<a†b><b†a> + <b†b><a†a> + <a†b†><ba>] / (<b†b><a†a>), or nan below the guard."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    y = _values(state)
    na, nb = y[_I["n_a"]], y[_I["n_b"]]
    if na.real < eps or nb.real < eps or na.real * nb.real < eps * eps:
        return UNDEFINED
    # <b†a> = <a b†> and <ba> = <ab>: the two modes commute
    num = y[_I["m_adb"]] * y[_I["m_abd"]] + nb * na + y[_I["m_adbd"]] * y[_I["m_ab"]]
    return _real_ratio(num, nb * na)


def classify(g2: float, tie_tol: float = 1e-6) -> Statistics:
    if math.isnan(g2):
        raise ValueError("cannot classify an undefined correlation")
    if g2 < 1.0 - tie_tol:
        return Statistics.SUB_POISSONIAN
    if g2 > 1.0 + tie_tol:
        return Statistics.SUPER_POISSONIAN
    return Statistics.POISSONIAN


OBSERVABLE_COLUMNS = ("t", "n_a", "n_b", "g2_a", "g2_b", "g2_ab")


def observables_series(traj, eps: float = EPS) -> dict[str, np.ndarray]:
    """Column table ``t, n_a, n_b, g2_a, g2_b, g2_ab`` for a moment trajectory."""
    states = np.asarray(traj.states)
    rows = [(g2_a(s, eps), g2_b(s, eps), g2_ab(s, eps)) for s in states]
    g2 = np.array(rows, dtype=float).reshape(len(states), 3)
    return {
        "t": np.asarray(traj.times, dtype=float),
        "n_a": states[:, _I["n_a"]].real.copy(),
        "n_b": states[:, _I["n_b"]].real.copy(),
        "g2_a": g2[:, 0],
        "g2_b": g2[:, 1],
        "g2_ab": g2[:, 2],
    }

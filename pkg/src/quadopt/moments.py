"""Second-order moment state, decorrelation rules and the closed moment RHS.

Two independent constructions of the same closed ODE system live here:

* :func:`closed_rhs` is a hand transcription of the fully decorrelated
  equations, one line per moment.
* :func:`composed_rhs` starts from the unclosed Heisenberg-Langevin moment
  equations, written as tables of operator words, and closes every third- and
  fourth-order word mechanically with :func:`decorrelate_triple` and
  :func:`decorrelate_quad`.

Both accept either a :class:`MomentState` or a complex array whose leading
axis has length 14 (extra axes broadcast, which is how the equivalence
harness evaluates many random states at once).

Operator words use one letter per ladder operator: ``a`` = a, ``A`` = a†,
``b`` = b, ``B`` = b†, read left to right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import SystemParams

SLOTS = (
    "m_a", "m_ad", "m_b", "m_bd", "n_a", "n_b",
    "m_abd", "m_adb", "m_ab", "m_adbd",
    "m_aa", "m_adad", "m_bb", "m_bdbd",
)
SLOT_INDEX = {name: i for i, name in enumerate(SLOTS)}
N_SLOTS = len(SLOTS)

# operator word of each slot
SLOT_WORDS = ("a", "A", "b", "B", "Aa", "Bb", "aB", "Ab", "ab", "AB", "aa", "AA", "bb", "BB")

# (slot, partner) pairs exchanged by hermitian conjugation; n_a, n_b map to themselves
CONJ_PAIRS = (("m_a", "m_ad"), ("m_b", "m_bd"), ("m_abd", "m_adb"),
              ("m_ab", "m_adbd"), ("m_aa", "m_adad"), ("m_bb", "m_bdbd"))
CONJ_PERM = np.arange(N_SLOTS)
for _x, _y in CONJ_PAIRS:
    CONJ_PERM[SLOT_INDEX[_x]], CONJ_PERM[SLOT_INDEX[_y]] = SLOT_INDEX[_y], SLOT_INDEX[_x]
del _x, _y


class MomentState:
    """The 14 complex first- and second-order moments, in :data:`SLOTS` order."""

    __slots__ = ("values",)

    def __init__(self, values):
        values = np.array(values, dtype=complex)
        if values.shape != (N_SLOTS,):
            raise ValueError(f"expected {N_SLOTS} moments, got shape {values.shape}")
        self.values = values

    @classmethod
    def vacuum(cls) -> "MomentState":
        return cls(np.zeros(N_SLOTS, dtype=complex))

    @classmethod
    def from_slots(cls, **slots: complex) -> "MomentState":
        values = np.zeros(N_SLOTS, dtype=complex)
        for name, value in slots.items():
            values[SLOT_INDEX[name]] = value
        return cls(values)

    @classmethod
    def from_reals(cls, reals) -> "MomentState":
        """Inverse of :meth:`to_reals` (28 interleaved re/im floats)."""
        reals = np.asarray(reals, dtype=float)
        return cls(reals[0::2] + 1j * reals[1::2])

    def to_reals(self) -> np.ndarray:
        return self.values.view(float).copy()

    def conj_flip(self) -> "MomentState":
        return MomentState(conj_flip(self.values))

    def conjugacy_deviation(self) -> float:
        return float(np.max(conjugacy_deviation(self.values)))

    def __getitem__(self, name: str) -> complex:
        return self.values[SLOT_INDEX[name]]

    def __eq__(self, other) -> bool:
        return isinstance(other, MomentState) and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}={v:.6g}" for n, v in zip(SLOTS, self.values))
        return f"MomentState({inner})"


for _i, _name in enumerate(SLOTS):
    setattr(MomentState, _name, property(lambda self, _i=_i: self.values[_i]))
del _i, _name

# time derivatives share the slot layout
MomentDerivative = MomentState


def conj_flip(y: np.ndarray) -> np.ndarray:
    """Swap every conjugate pair and conjugate all slots (leading axis = slots)."""
    return np.conj(np.asarray(y)[CONJ_PERM])


def conjugacy_deviation(y: np.ndarray) -> np.ndarray:
    """Per-slot ``|y - conj_flip(y)|``; zero for a physical (hermitian) moment set."""
    y = np.asarray(y)
    return np.abs(y - conj_flip(y))


def _as_array(state) -> np.ndarray:
    if isinstance(state, MomentState):
        return state.values
    return np.asarray(state, dtype=complex)


# --- decorrelation -------------------------------------------------------------

def decorrelate_triple(sA, sB, sC, pAB, pAC, pBC):
    """<ABC> ~ <A><BC> + <AB><C> + <AC><B>."""
    return sA * pBC + pAB * sC + pAC * sB


def decorrelate_quad(pAB, pCD, pAC, pBD, pAD, pBC):
    """<ABCD> ~ <AB><CD> + <AC><BD> + <AD><BC>."""
    return pAB * pCD + pAC * pBD + pAD * pBC


# --- closed system, transcribed equation by equation ---------------------------

def closed_rhs(state, params: SystemParams) -> np.ndarray:
    """Time derivative of all 14 moments from the decorrelated closed equations."""
    y = _as_array(state)
    if y.ndim == 1:
        y = y.tolist()  # python complex arithmetic is much faster than numpy scalars
    a, ad, b, bd, na, nb, abd, adb, ab, adbd, aa, adad, bb, bdbd = y
    D, w, g = params.delta_c, params.omega_m, params.g_opt
    W, Ga, Gb = params.rabi, params.gamma_a, params.gamma_b
    Na, Nb = params.nbar_a, params.nbar_b
    Gab = 0.5 * (Ga + Gb)
    j = 1j

    da = (-j * D * a - j * W - 0.5 * Ga * a
          - j * g * ((a * bdbd + 2 * abd * bd) + (a * bb + 2 * ab * b)
                     + 2 * (a * nb + abd * b + ab * bd) + a))
    dad = (j * D * ad + j * W - 0.5 * Ga * ad
           + j * g * ((ad * bdbd + 2 * adbd * bd) + (ad * bb + 2 * adb * b)
                      + 2 * (ad * nb + adbd * b + adb * bd) + ad))

    mech = ad * (ab + abd) + na * (b + bd) + a * (adb + adbd)
    db = -j * w * b - 0.5 * Gb * b - 2 * j * g * mech
    dbd = j * w * bd - 0.5 * Gb * bd + 2 * j * g * mech

    dna = -j * W * (ad - a) - Ga * na + Ga * Na
    dnb = (-2 * j * g * ((na * bdbd + 2 * adbd * abd) - (na * bb + 2 * adb * ab))
           - Gb * nb + Gb * Nb)

    dabd = (j * (w - D) * abd - j * W * bd - Gab * abd
            + j * g * (2 * (2 * na * ab + adb * aa)
                       - (abd * bb + 2 * ab * nb)
                       + 2 * ((2 * na * abd + adbd * aa) - (2 * nb * abd + ab * bdbd))
                       - abd * (3 * bdbd + 1)))
    dadb = (j * (D - w) * adb + j * W * b - Gab * adb
            + j * g * ((adb * bdbd + 2 * adbd * nb)
                       - 2 * (adad * abd + 2 * na * adbd)
                       + 2 * ((adbd * bb + 2 * adb * nb) - (adad * ab + 2 * adb * na))
                       + adb * (3 * bb + 1)))

    dab = (-j * (D + w) * ab - j * W * b - Gab * ab
           - j * g * (2 * abd + 3 * ab * (bb + 1))
           - j * g * (ab * bdbd + 2 * abd * nb)
           - 2 * j * g * ((2 * na * abd + adbd * aa) + (abd * bb + 2 * ab * nb)
                          + (2 * na * ab + adb * aa)))
    dadbd = (j * (D + w) * adbd + j * W * bd - Gab * adbd
             + j * g * (2 * adb + 3 * adbd * (bdbd + 1))
             + j * g * (adbd * bb + 2 * adb * nb)
             + 2 * j * g * ((adad * ab + 2 * na * adb) + (bdbd * adb + 2 * adbd * nb)
                            + (2 * na * adbd + abd * adad)))

    daa = (-2 * j * D * aa - 2 * j * W * a - Ga * aa - 2 * j * g * aa
           - 2 * j * g * (aa * (bdbd + bb + 2 * nb)
                          + 2 * (abd * abd + ab * ab + 2 * ab * abd)))
    dadad = (2 * j * D * adad + 2 * j * W * ad - Ga * adad + 2 * j * g * adad
             + 2 * j * g * (adad * (bdbd + bb + 2 * nb)
                            + 2 * (adbd * adbd + adb * adb + 2 * adbd * adb)))

    dbb = (-2 * j * w * bb - Gb * bb - 2 * j * g * na
           - 4 * j * g * (na * (bb + nb) + ab * (adbd + 2 * adb) + adb * abd))
    dbdbd = (2 * j * w * bdbd - Gb * bdbd + 2 * j * g * na
             + 4 * j * g * (na * (bdbd + nb) + adbd * (ab + 2 * abd) + adb * abd))

    out = (da, dad, db, dbd, dna, dnb, dabd, dadb, dab, dadbd, daa, dadad, dbb, dbdbd)
    if np.ndim(da) == 0 and np.ndim(state) <= 1:
        return np.array(out, dtype=complex)
    shape = np.broadcast_shapes(*(np.shape(t) for t in out))
    return np.stack([np.broadcast_to(t, shape) for t in out]).astype(complex)


# --- composed system: unclosed equations + mechanical decorrelation -------------

_SAME_MODE_PAIRS = {"Aa": ("n_a", 0.0), "aA": ("n_a", 1.0), "Bb": ("n_b", 0.0), "bB": ("n_b", 1.0),
                    "aa": ("m_aa", 0.0), "AA": ("m_adad", 0.0),
                    "bb": ("m_bb", 0.0), "BB": ("m_bdbd", 0.0)}
_CROSS_PAIRS = {"aB": "m_abd", "Ab": "m_adb", "ab": "m_ab", "AB": "m_adbd"}
_SINGLES = {"a": "m_a", "A": "m_ad", "b": "m_b", "B": "m_bd"}


def _pair(y, x1: str, x2: str):
    """<x1 x2> from slots; different modes commute, <a a†> = <a†a> + 1."""
    if x1.lower() != x2.lower():
        key = x1 + x2 if x1 in "aA" else x2 + x1
        return y[SLOT_INDEX[_CROSS_PAIRS[key]]]
    name, shift = _SAME_MODE_PAIRS[x1 + x2]
    return y[SLOT_INDEX[name]] + shift


def expectation(y, word: str):
    """<word> in terms of first/second moments, decorrelating order 3 and 4."""
    if len(word) == 1:
        return y[SLOT_INDEX[_SINGLES[word]]]
    if len(word) == 2:
        return _pair(y, *word)
    if len(word) == 3:
        A, B, C = word
        s = lambda x: y[SLOT_INDEX[_SINGLES[x]]]
        return decorrelate_triple(s(A), s(B), s(C), _pair(y, A, B), _pair(y, A, C), _pair(y, B, C))
    if len(word) == 4:
        A, B, C, D = word
        return decorrelate_quad(_pair(y, A, B), _pair(y, C, D), _pair(y, A, C),
                                _pair(y, B, D), _pair(y, A, D), _pair(y, B, C))
    raise ValueError(f"no closure for operator word of length {len(word)}: {word!r}")


def unclosed_equations(params: SystemParams) -> dict[str, tuple[complex, list[tuple[complex, str]]]]:
    """Heisenberg-Langevin moment equations before closure.

    Maps each slot to ``(constant, [(coefficient, operator word), ...])``.
    """
    D, w, g = params.delta_c, params.omega_m, params.g_opt
    W, Ga, Gb = params.rabi, params.gamma_a, params.gamma_b
    j = 1j
    Gab = 0.5 * (Ga + Gb)

    def scaled(c, terms):
        return [(c * k, word) for k, word in terms]

    return {
        "m_a": (-j * W, [(-j * D - 0.5 * Ga, "a")]
                + scaled(-j * g, [(1, "aBB"), (1, "abb"), (2, "aBb"), (1, "a")])),
        "m_ad": (j * W, [(j * D - 0.5 * Ga, "A")]
                 + scaled(j * g, [(1, "ABB"), (1, "Abb"), (2, "ABb"), (1, "A")])),
        "m_b": (0, [(-j * w - 0.5 * Gb, "b")] + scaled(-2 * j * g, [(1, "Aab"), (1, "AaB")])),
        "m_bd": (0, [(j * w - 0.5 * Gb, "B")] + scaled(2 * j * g, [(1, "AaB"), (1, "Aab")])),
        "n_a": (Ga * params.nbar_a, [(-j * W, "A"), (j * W, "a"), (-Ga, "Aa")]),
        "n_b": (Gb * params.nbar_b, [(-Gb, "Bb")] + scaled(-2 * j * g, [(1, "AaBB"), (-1, "Aabb")])),
        "m_abd": (0, [(j * (w - D) - Gab, "aB"), (-j * W, "B")]
                  + scaled(j * g, [(2, "Aaab"), (-1, "aBbb"), (-1, "aBBB"),
                                   (2, "AaaB"), (-2, "aBBb"), (-1, "aB")])),
        "m_adb": (0, [(j * (D - w) - Gab, "Ab"), (j * W, "b")]
                  + scaled(j * g, [(1, "ABBb"), (1, "Abbb"), (-2, "AAaB"),
                                   (2, "ABbb"), (-2, "AAab"), (1, "Ab")])),
        "m_ab": (0, [(-j * (D + w) - Gab, "ab"), (-j * W, "b")]
                 + scaled(-j * g, [(2, "aB"), (1, "aBBb"), (2, "AaaB"), (1, "abbb"),
                                   (2, "ab"), (2, "aBbb"), (2, "Aaab"), (1, "ab")])),
        "m_adbd": (0, [(j * (D + w) - Gab, "AB"), (j * W, "B")]
                   + scaled(j * g, [(2, "Ab"), (1, "ABbb"), (2, "AAab"), (1, "ABBB"),
                                    (2, "AB"), (2, "ABBb"), (2, "AAaB"), (1, "AB")])),
        "m_aa": (0, [(-2 * j * D - Ga, "aa"), (-2 * j * W, "a")]
                 + scaled(-2 * j * g, [(1, "aaBB"), (1, "aabb"), (2, "aaBb"), (1, "aa")])),
        "m_adad": (0, [(2 * j * D - Ga, "AA"), (2 * j * W, "A")]
                   + scaled(2 * j * g, [(1, "AABB"), (1, "AAbb"), (2, "AABb"), (1, "AA")])),
        "m_bb": (0, [(-2 * j * w - Gb, "bb")]
                 + scaled(-2 * j * g, [(1, "Aa"), (2, "AaBb"), (2, "Aabb")])),
        "m_bdbd": (0, [(2 * j * w - Gb, "BB")]
                   + scaled(2 * j * g, [(1, "Aa"), (2, "AaBb"), (2, "AaBB")])),
    }


def composed_rhs(state, params: SystemParams) -> np.ndarray:
    """Time derivative of all 14 moments, closed mechanically from the unclosed equations."""
    y = _as_array(state)
    table = unclosed_equations(params)
    out = []
    for name in SLOTS:
        const, terms = table[name]
        total = const + sum(coef * expectation(y, word) for coef, word in terms)
        out.append(np.broadcast_to(total, y.shape[1:]))
    return np.array(out, dtype=complex)


RHS_FUNCTIONS: dict[str, Callable] = {"closed": closed_rhs, "composed": composed_rhs}


def rhs_for(variant: str) -> Callable:
    try:
        return RHS_FUNCTIONS[variant]
    except KeyError:
        raise ValueError(f"unknown rhs_variant {variant!r}; choose from {sorted(RHS_FUNCTIONS)}") from None


# --- equivalence harness --------------------------------------------------------

# Slots where the transcribed closed equations are known to differ from the
# mechanical composition.  Each entry: slot -> (symbolic description, callable
# returning closed - composed for an array of states).  The harness flags any
# slot that deviates and is missing here.
DOCUMENTED_DISCREPANCIES: dict[str, tuple[str, Callable]] = {}

MATCH_RTOL = 1e-12


def random_states(n: int, seed, radius: float = 2.0) -> np.ndarray:
    """``(14, n)`` random states: slots uniform in the disc |z| <= radius, n_a/n_b real in [0, radius]."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random((N_SLOTS, n)))
    phi = 2 * np.pi * rng.random((N_SLOTS, n))
    y = r * np.exp(1j * phi)
    for name in ("n_a", "n_b"):
        y[SLOT_INDEX[name]] = radius * rng.random(n)
    return y


@dataclass(frozen=True)
class DiscrepancyRow:
    slot: str
    max_rel_dev: float
    documented: bool
    note: str = ""

    @property
    def matches(self) -> bool:
        return self.max_rel_dev <= MATCH_RTOL

    @property
    def flagged(self) -> bool:
        """Mismatch that is not explained by a documented symbolic difference."""
        return not self.matches and not self.documented


def _rel_dev(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.abs(x), np.abs(y))
    diff = np.abs(x - y)
    return np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)


def rhs_discrepancy_report(params: SystemParams, n_random: int = 1000, seed=1, *,
                           closed: Callable = closed_rhs,
                           documented: dict | None = None) -> list[DiscrepancyRow]:
    """Per-slot max relative |closed - composed| over seeded random states.

    A slot listed in :data:`DOCUMENTED_DISCREPANCIES` counts as documented
    only if its recorded symbolic difference reproduces the numerical
    difference to :data:`MATCH_RTOL`.
    """
    if n_random < 1:
        raise ValueError("n_random must be >= 1")
    if documented is None:
        documented = DOCUMENTED_DISCREPANCIES
    y = random_states(n_random, seed)
    lhs = closed(y, params)
    rhs = composed_rhs(y, params)
    rows = []
    for i, name in enumerate(SLOTS):
        dev = float(np.max(_rel_dev(lhs[i], rhs[i])))
        is_documented, note = False, ""
        if name in documented:
            note, diff_fn = documented[name]
            explained = rhs[i] + diff_fn(y, params)
            is_documented = bool(np.max(_rel_dev(lhs[i], explained)) <= MATCH_RTOL)
        rows.append(DiscrepancyRow(name, dev, is_documented, note))
    return rows


def format_report(rows: list[DiscrepancyRow]) -> str:
    lines = [f"{'slot':<8} {'max rel dev':>12}  status"]
    for r in rows:
        status = "match" if r.matches else ("documented" if r.documented else "UNFLAGGED MISMATCH")
        lines.append(f"{r.slot:<8} {r.max_rel_dev:12.3e}  {status}" + (f"  ({r.note})" if r.note else ""))
    return "\n".join(lines)

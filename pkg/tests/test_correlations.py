import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadopt.correlations import Statistics, classify, g2_a, g2_ab, g2_b, observables_series
from quadopt.moments import SLOT_INDEX, MomentState, conj_flip, random_states
from quadopt.params import SimConfig, SystemParams
from quadopt.simulation import run_moments

I = SLOT_INDEX


def state(**slots):
    return MomentState.from_slots(**slots)


def test_g2_a_examples():
    assert g2_a(state(n_a=1)) == 2.0
    assert g2_a(state(n_a=2, m_aa=1 + 1j, m_adad=1 - 1j)) == 2.5
    assert math.isnan(g2_a(state(n_a=1e-12), eps=1e-9))


def test_g2_b_examples():
    assert g2_b(state(n_b=1)) == 2.0
    assert g2_b(state(n_b=3, m_bb=2j, m_bdbd=-2j)) == pytest.approx(22 / 9, rel=1e-15)
    assert math.isnan(g2_b(state(n_b=1e-10)))


def test_g2_ab_examples():
    assert g2_ab(state(n_a=1, n_b=1)) == 1.0
    assert g2_ab(state(n_a=1, n_b=1, m_adb=1, m_abd=1)) == 2.0
    assert math.isnan(g2_ab(state(n_a=1e-10, n_b=1)))
    assert math.isnan(g2_ab(state(n_a=1, n_b=0)))


def test_product_guard():
    # both populations above eps but their product below eps^2
    assert math.isnan(g2_ab(state(n_a=2e-9, n_b=2e-9 / 4), eps=1e-9))


def test_eps_must_be_positive():
    with pytest.raises(ValueError):
        g2_a(state(n_a=1), eps=0.0)


def test_imaginary_residue_raises():
    with pytest.raises(ValueError):
        g2_a(state(n_a=1, m_aa=1j, m_adad=1))


@pytest.mark.parametrize("g2, expected", [(0.4, Statistics.SUB_POISSONIAN), (1.0, Statistics.POISSONIAN),
                                          (3.0, Statistics.SUPER_POISSONIAN)])
def test_classify(g2, expected):
    assert classify(g2) is expected


def test_classify_rejects_undefined():
    with pytest.raises(ValueError):
        classify(math.nan)


def _physical(seed):
    y = random_states(1, seed)[:, 0]
    y = 0.5 * (y + conj_flip(y))
    y[I["n_a"]] += 0.5
    y[I["n_b"]] += 0.5
    return y


A_CHARGE = {"m_a": 1, "m_ad": -1, "m_abd": 1, "m_adb": -1, "m_ab": 1, "m_adbd": -1, "m_aa": 2, "m_adad": -2}


@given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0, 2 * np.pi))
def test_phase_invariance(seed, theta):
    y = _physical(seed)
    z = y.copy()
    for slot, q in A_CHARGE.items():
        z[I[slot]] *= np.exp(1j * q * theta)
    for g in (g2_a, g2_b, g2_ab):
        assert g(z) == pytest.approx(g(y), rel=1e-12, abs=1e-12)


@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.1, 10))
def test_scale_covariance(seed, lam):
    y = _physical(seed)
    z = y.copy()
    z[I["m_a"]] *= lam
    z[I["m_ad"]] *= lam
    z[I["m_aa"]] *= lam**2
    z[I["m_adad"]] *= lam**2
    z[I["n_a"]] *= lam**2
    assert g2_a(z) == pytest.approx(g2_a(y), rel=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_lower_bound(seed):
    y = _physical(seed)
    na = y[I["n_a"]].real
    assert g2_a(y) >= 2 - abs(y[I["m_adad"]] * y[I["m_aa"]]) / na**2 - 1e-12


def test_observables_of_vacuum_start():
    p = SystemParams(delta_c=1.0, g_opt=1.4, rabi=0.6, gamma_a=0.01, gamma_b=0.001)
    table = observables_series(run_moments(p, SimConfig(t_end=2.0, n_samples=41)))
    assert list(table) == ["t", "n_a", "n_b", "g2_a", "g2_b", "g2_ab"]
    assert all(math.isnan(table[c][0]) for c in ("g2_a", "g2_b", "g2_ab"))
    assert np.isfinite(table["g2_a"][-1])


def test_thermal_relaxation_gives_chaotic_phonons():
    p = SystemParams(gamma_b=0.1, nbar_b=2.0)
    table = observables_series(run_moments(p, SimConfig(t_end=50.0, n_samples=201)))
    defined = table["g2_b"][np.isfinite(table["g2_b"])]
    assert len(defined) == 200
    np.testing.assert_array_equal(defined, 2.0)

import math

import numpy as np
import pytest

from quadopt.integrator import ADAPTIVE, FIXED, StepperConfig, check_grid, integrate
from quadopt.moments import SLOT_INDEX, closed_rhs, conjugacy_deviation
from quadopt.params import SimConfig
from quadopt.scenarios import preset
from quadopt.simulation import run_moments, stepper_for

TIGHT = StepperConfig(rel_tol=1e-10, abs_tol=1e-12)


def test_exponential_decay():
    traj = integrate(lambda t, y: -y, np.array([1.0]), [0.0, 1.0], TIGHT)
    assert traj.ok
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-8)


def test_unit_circle_rotation():
    traj = integrate(lambda t, y: 1j * y, np.array([1.0 + 0j]), [0.0, 2 * np.pi], TIGHT)
    y = traj.states[-1, 0]
    assert abs(y) == pytest.approx(1.0, abs=1e-8)
    assert y == pytest.approx(1.0, abs=1e-8)


def test_samples_land_exactly_on_grid():
    grid = np.linspace(0, 3, 7)
    traj = integrate(lambda t, y: np.cos(t) * np.ones_like(y), np.zeros(2), grid, TIGHT)
    np.testing.assert_array_equal(traj.times, grid)
    np.testing.assert_allclose(traj.states[:, 0], np.sin(grid), atol=1e-9)


def test_time_dependent_rhs_fixed_mode_is_fourth_order():
    def err(h):
        cfg = StepperConfig(mode=FIXED, h_init=h, h_min=h)
        traj = integrate(lambda t, y: np.array([np.cos(t) * y[0]]), np.array([1.0]), [0.0, 2.0], cfg)
        return abs(traj.states[-1, 0] - math.exp(math.sin(2.0)))

    ratio = err(0.1) / err(0.05)
    assert 12 < ratio < 20


def test_fixed_mode_substep_count():
    cfg = StepperConfig(mode=FIXED, h_init=0.3, h_min=0.3)
    traj = integrate(lambda t, y: -y, np.ones(1), [0.0, 1.0, 1.5], cfg)
    # ceil(1/0.3) = 4 and ceil(0.5/0.3) = 2
    assert traj.stats["steps"] == 6
    assert traj.stats["rhs_evals"] == 24


def test_observe_stores_reduced_samples():
    traj = integrate(lambda t, y: -y, np.array([2.0, 4.0]), [0.0, 1.0], TIGHT,
                     observe=lambda t, y: float(y.sum()))
    assert traj.states[0] == 6.0
    assert traj.states[1] == pytest.approx(6 * math.exp(-1), rel=1e-9)


@pytest.mark.parametrize("grid", [[], [1.0, 2.0], [0.0, 1.0, 1.0], [0.0, 2.0, 1.0]])
def test_bad_grids_rejected(grid):
    with pytest.raises(ValueError):
        check_grid(grid)


def test_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(mode="euler")
    with pytest.raises(ValueError):
        StepperConfig(h_init=2.0, h_max=1.0)
    with pytest.raises(ValueError):
        StepperConfig(rel_tol=0.0)


def test_non_finite_initial_state_rejected():
    with pytest.raises(ValueError):
        integrate(lambda t, y: y, np.array([np.nan]), [0.0, 1.0])


def test_blow_up_reports_status_and_keeps_reached_samples():
    # y' = y^2, y(0)=1 blows up at t=1
    traj = integrate(lambda t, y: y * y, np.array([1.0]), np.linspace(0, 2, 9), TIGHT)
    assert not traj.ok
    assert traj.status in ("step_underflow", "non_finite")
    assert traj.times[-1] < 1.0
    assert len(traj) == len(traj.times) == len(traj.states)


def test_max_steps_status():
    cfg = StepperConfig(h_init=1e-3, h_max=1e-3, max_steps=10)
    traj = integrate(lambda t, y: -y, np.ones(1), [0.0, 1.0], cfg)
    assert traj.status == "max_steps"
    assert len(traj) == 1


def test_non_finite_rhs_status():
    traj = integrate(lambda t, y: np.full_like(y, np.inf), np.ones(1), [0.0, 1.0], TIGHT)
    assert traj.status == "non_finite"


def test_step_underflow_status():
    # a discontinuous right-hand side cannot meet the tolerance with h >= h_min
    cfg = StepperConfig(rel_tol=1e-14, abs_tol=1e-16, h_min=1e-3, h_init=1e-2)
    traj = integrate(lambda t, y: np.array([1e6 * math.copysign(1.0, t - 0.5)]), np.zeros(1),
                     [0.0, 1.0], cfg)
    assert traj.status == "step_underflow"


def test_determinism():
    p = preset("fig1b").params
    cfg = SimConfig(t_end=10, n_samples=201)
    a, b = run_moments(p, cfg), run_moments(p, cfg)
    assert a.states.tobytes() == b.states.tobytes()
    assert a.stats == b.stats


def test_fig1b_trajectory_keeps_conjugacy():
    traj = run_moments(preset("fig1b").params)
    assert traj.ok and len(traj) == 2001
    assert conjugacy_deviation(traj.states.T).max() < 1e-8
    assert np.abs(traj.states[:, SLOT_INDEX["n_a"]].imag).max() < 1e-8
    assert np.abs(traj.states[:, SLOT_INDEX["n_b"]].imag).max() < 1e-8


@pytest.mark.parametrize("name", ["fig1b", "fig5d"])
def test_adaptive_agrees_with_fixed_rk4(name):
    # a 5-unit window keeps the 1e-4 fixed-step reference affordable
    p = preset(name).params
    cfg = SimConfig(t_end=5.0, n_samples=201)
    adaptive = run_moments(p, cfg)
    fixed = run_moments(p, cfg, stepper_for(cfg, mode=FIXED, h_init=1e-4, h_min=1e-4))
    for slot in ("n_a", "n_b"):
        x = adaptive.states[:, SLOT_INDEX[slot]].real
        y = fixed.states[:, SLOT_INDEX[slot]].real
        assert np.abs(x - y).max() <= 1e-6 * np.abs(y).max()


@pytest.mark.parametrize("name", ["fig1b", "fig3b", "fig5b"])
def test_tighter_tolerance_never_worse(name):
    p = preset(name).params
    cfg = SimConfig(t_end=10.0, n_samples=11)
    ref = run_moments(p, cfg, stepper_for(cfg, rel_tol=1e-12, abs_tol=1e-14)).states[-1]
    errors = []
    for tol in (1e-5, 5e-6, 2.5e-6, 1.25e-6):
        y = run_moments(p, cfg, stepper_for(cfg, rel_tol=tol, abs_tol=tol * 1e-2)).states[-1]
        errors.append(np.abs(y - ref).max())
    assert all(b <= a for a, b in zip(errors, errors[1:])), errors

import math

import numpy as np
import pytest

from relaxkit.classify import classify
from relaxkit.errors import DomainError
from relaxkit.gen import rc_two_port, random_relaxation
from relaxkit.hankel import SampledSignal, build_grid, discretize_hankel
from relaxkit.model import StateSpaceModel, Trajectory, impulse_response_g
from relaxkit.model import simulate_zoh
from relaxkit.passivity import solve_T
from relaxkit.storage import (derivative_system, gradient_check, held_storage, past_window,
                              storage_trace, storage_value)

from helpers import first_order


@pytest.fixture(scope="module")
def fo():
    s = first_order()
    return discretize_hankel(s, build_grid(s))


def test_storage_value_examples(fo):
    g = fo.grid
    assert storage_value(fo, SampledSignal.zeros(g, 1)) == 0.0
    u = SampledSignal.from_function(g, lambda t: np.exp(-t))
    assert storage_value(fo, u) == pytest.approx(0.125, abs=1e-10)
    s = random_relaxation(5, 4, 3, 3)
    hd = discretize_hankel(s, build_grid(s))
    rng = np.random.default_rng(5)
    for _ in range(5):
        u = SampledSignal(hd.grid, rng.standard_normal((hd.grid.node_count, 3)))
        assert storage_value(hd, u) >= -1e-10 * hd.norm * u.norm() ** 2


def _traj(times, inputs):
    inputs = np.asarray(inputs, float).reshape(len(times), -1)
    z = np.zeros((len(times), 1))
    return Trajectory(np.asarray(times, float), z, inputs, z)


def test_past_window_examples(fo):
    g = fo.grid
    # a constant input recorded over more than the horizon
    times = np.linspace(-30.0, 0.0, 3001)
    w = past_window(_traj(times, np.full(3001, 2.5)), 0.0, g)
    assert np.allclose(w.values, 2.5)
    # u(s) = e^s seen from t = 0 is e^{-tau}; linear interpolation costs at most h^2/8
    w = past_window(_traj(times, np.exp(times)), 0.0, g)
    assert np.allclose(w.values[:, 0], np.exp(-g.nodes), rtol=0, atol=0.01 ** 2 / 8)
    # nodes reaching before the recording are zero
    short = np.linspace(0.0, 5.0, 51)
    w = past_window(_traj(short, np.ones(51)), 5.0, g)
    assert np.all(w.values[g.nodes > 5.0] == 0) and np.all(w.values[g.nodes < 5.0] == 1)
    with pytest.raises(DomainError):
        past_window(_traj(short, np.ones(51)), -1.0, g)


def test_previous_kind_holds_samples(fo):
    times = np.arange(0.0, 30.0, 0.5)
    w = past_window(_traj(times, times), 29.5, fo.grid, kind="previous")
    expect = times[np.searchsorted(times, 29.5 - fo.grid.nodes, side="right") - 1]
    assert np.array_equal(w.values[:, 0], np.where(29.5 - fo.grid.nodes < 0, 0.0, expect))


def test_storage_trace_zero_input(fo):
    tr = storage_trace(first_order(), fo, np.zeros((2000, 1)), 0.02)
    assert not np.any(tr.storage) and not np.any(tr.residuals)
    assert len(tr.residuals) == len(tr.times) - 1 == len(tr.storage) - 1 == len(tr.work)


def test_step_work_is_exact():
    # first order, unit step from rest: y = 1 - e^{-t}, work over [0, t] is t - 1 + e^{-t}
    s = first_order()
    hd = discretize_hankel(s, build_grid(s))
    for hold in ("foh", "zoh"):
        tr = storage_trace(s, hd, np.ones((51, 1)), 0.1, burn_in=0.0, hold=hold, evaluation="exact")
        t = tr.times
        assert np.allclose(np.cumsum(tr.work), t[1:] - 1 + np.exp(-t[1:]), rtol=1e-13, atol=1e-15)
        # V = (1 - e^{-t})^2 / 2 and the residual is minus the mean dissipation y^2
        assert np.allclose(tr.storage, 0.5 * (1 - np.exp(-t)) ** 2, rtol=1e-13, atol=1e-16)
        assert np.all(tr.residuals < 0)


def test_held_storage_matches_state_storage():
    for seed in range(10):
        s = random_relaxation(seed, 3, 2, 2)
        rng = np.random.default_rng(seed)
        traj = simulate_zoh(s, rng.standard_normal((400, 2)), 0.05)
        X = traj.states
        expect = 0.5 * np.einsum("ki,ij,kj->k", X, solve_T(s).T, X)
        assert np.allclose(held_storage(s, traj, 0.05, "zoh"), expect, rtol=1e-10, atol=1e-14)


def test_quadrature_storage_matches_state_storage():
    # the Hankel functional on linearly interpolated windows; kinks between
    # samples limit the accuracy, which a fine dt and grid keep below 1e-6
    for seed in (2, 6):
        s = random_relaxation(seed, 2, 2, 2)
        hd = discretize_hankel(s, build_grid(s, 128))
        dt = 2.5e-3
        t = dt * np.arange(int((hd.grid.horizon + 1.0) / dt))
        U = np.stack([np.sin(0.9 * t + 1.0), np.cos(0.4 * t)], axis=1)
        tr = storage_trace(s, hd, U, dt)
        assert np.max(np.abs(tr.storage - tr.state_storage)) <= 1e-6 * np.max(tr.storage)


def test_rc_step_storage_matches_charge():
    # unit RC, i1 = 1, i2 = 0: the capacitor charge is 1 - e^{-t}
    s = rc_two_port()
    hd = discretize_hankel(s, build_grid(s))
    dt = 1e-2
    U = np.zeros((int(6 / dt) + 1, 2))
    U[:, 0] = 1.0
    tr = storage_trace(s, hd, U, dt, burn_in=0.0)
    q = 1 - np.exp(-tr.times)
    assert np.allclose(tr.storage[1:], 0.5 * q[1:] ** 2, rtol=1e-6, atol=0)
    assert np.allclose(tr.state_storage, 0.5 * q ** 2, rtol=0, atol=1e-12)
    assert tr.max_residual() <= tr.tolerance()


@pytest.mark.parametrize("hold", ["foh", "zoh"])
@pytest.mark.parametrize("evaluation", ["quadrature", "exact"])
def test_dissipation_inequality_smooth_input(hold, evaluation):
    s = random_relaxation(12, 3, 2, 2)
    hd = discretize_hankel(s, build_grid(s))
    for dt in (1e-2, 5e-3):
        t = dt * np.arange(int((hd.grid.horizon + 2.0) / dt))
        U = np.stack([np.sin(0.7 * t), np.cos(1.3 * t + 0.4)], axis=1)
        tr = storage_trace(s, hd, U, dt, hold=hold, evaluation=evaluation)
        assert tr.max_residual() <= tr.tolerance(1e-6)
        assert np.min(tr.storage) >= 0 and tr.evaluation == evaluation


def test_storage_trace_rejects_bad_arguments(fo):
    with pytest.raises(DomainError):
        storage_trace(first_order(), fo, np.zeros((10, 1)), 0.1, hold="rk4")
    with pytest.raises(DomainError):
        storage_trace(first_order(), fo, np.zeros((10, 1)), 0.1)   # shorter than burn-in
    with pytest.raises(DomainError):
        storage_trace(first_order(), fo, np.zeros((10, 1)), 0.1, evaluation="guess")


def test_gradient_check_examples(fo):
    g = fo.grid
    rng = np.random.default_rng(0)
    u = SampledSignal(g, rng.standard_normal(g.node_count) * np.exp(-g.nodes))
    dirs = [SampledSignal(g, rng.standard_normal(g.node_count)) for _ in range(5)]
    for eps in (1e-6, 1e-2, 1.0):
        assert gradient_check(fo, u, dirs, eps) <= 1e-10
    assert gradient_check(fo, u, [SampledSignal.zeros(g, 1)]) == 0.0
    with pytest.raises(DomainError):
        gradient_check(fo, u, dirs, 0.0)


def test_derivative_system_examples():
    d = derivative_system(first_order())
    assert np.array_equal(d.A, [[-1.0]]) and np.array_equal(d.B, [[1.0]])
    assert np.array_equal(d.C, [[1.0]]) and np.array_equal(d.D, [[0.0]])
    assert impulse_response_g(d, 0.7)[0, 0] == pytest.approx(math.exp(-0.7), rel=1e-14)
    s = random_relaxation(3, 3, 2, 1)
    dd = derivative_system(derivative_system(s))
    assert np.allclose(dd.C, s.C @ s.A @ s.A) and not np.any(dd.D)
    zero = StateSpaceModel(-np.eye(2), np.eye(2), np.zeros((2, 2)), np.eye(2))
    assert not np.any(derivative_system(zero).C) and not np.any(derivative_system(zero).D)


def test_derivative_system_stays_relaxation():
    for seed in range(10):
        s = random_relaxation(seed, 3, 2, 2)
        assert classify(derivative_system(s)).overall

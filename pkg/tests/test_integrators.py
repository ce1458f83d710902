import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import feedback, pairwise_field, rk4_by_hand, toy_config, toy_readout
from kuramoto_rc.errors import InvalidArgument
from kuramoto_rc.integrators import (
    InputSampler,
    StepSchedule,
    observed_order,
    rk1_driven_step,
    rk4_autonomous_step,
    rk4_driven_step,
    rk4_generic_step,
    rk4_rk1_step,
)
from kuramoto_rc.readout import ReadoutWeights
from kuramoto_rc.tasks import LorenzParams, lorenz_rhs


def test_decoupled_step_is_exact(rng):
    cfg = toy_config(N=6, K=0.0, F=0.0)
    th = rng.random(6)
    s = InputSampler(rng.standard_normal((3, 2)), 0.05)
    np.testing.assert_allclose(rk4_driven_step(th, cfg, s, 0.0, 0.05), th + 0.05 * cfg.omega, atol=1e-15)


def _relax_exact(phi0, F, t):
    # phi' = -F sin(phi) integrates to tan(phi/2) = tan(phi0/2) exp(-F t)
    return 2.0 * math.atan(math.tan(phi0 / 2.0) * math.exp(-F * t))


def test_driven_step_fourth_order():
    # one oscillator, no coupling, omega = 0, constant input: theta' = F sin(c u - theta)
    F, c, u, T = 1.0, 1.0, 0.5, 2.0
    cfg = toy_config(N=1, M=1, K=0.0, F=F, c=c, freq_params={"mu": 0.0, "sigma": 0.0})
    th0 = -1.0
    exact = c * u - _relax_exact(c * u - th0, F, T)
    hs = [0.2, 0.1, 0.05, 0.025]
    errs = []
    for h in hs:
        n = int(round(T / h))
        s = InputSampler(np.full((2 * n + 1, 1), u), h)
        th = np.array([th0])
        for i in range(n):
            th = rk4_driven_step(th, cfg, s, i * h, h)
        errs.append(abs(th[0] - exact))
    assert np.all(observed_order(errs, hs) >= 3.9)


def test_driven_step_matches_hand_rk4(rng):
    cfg = toy_config(N=3, M=2)
    h = 0.07
    grid = rng.standard_normal((5, 2))
    s = InputSampler(grid, h)
    th = rng.random(3) * 6
    got = rk4_driven_step(th, cfg, s, h, h)  # step 1 uses rows 2, 3, 4
    k1 = pairwise_field(th, cfg, grid[2])
    k2 = pairwise_field(th + 0.5 * h * k1, cfg, grid[3])
    k3 = pairwise_field(th + 0.5 * h * k2, cfg, grid[3])
    k4 = pairwise_field(th + h * k3, cfg, grid[4])
    np.testing.assert_allclose(got, th + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4), atol=1e-14)


def test_rk1_step(rng):
    cfg = toy_config(N=4, M=2)
    grid = rng.standard_normal((3, 2))
    th = rng.random(4)
    got = rk1_driven_step(th, cfg, InputSampler(grid, 0.1), 0.0, 0.1)
    np.testing.assert_allclose(got, th + 0.1 * pairwise_field(th, cfg, grid[0]), atol=1e-15)


def test_autonomous_step_zero_feedback_unforced(rng):
    cfg = toy_config(N=5, F=0.0)
    th = rng.random(5)
    ro = toy_readout(cfg)
    s = InputSampler(np.zeros((3, cfg.M)), 0.01)
    np.testing.assert_allclose(rk4_autonomous_step(th, cfg, ro, 0.01), rk4_driven_step(th, cfg, s, 0.0, 0.01), atol=1e-15)
    np.testing.assert_allclose(rk4_rk1_step(th, cfg, ro, 0.01), rk4_autonomous_step(th, cfg, ro, 0.01), atol=1e-15)


@pytest.mark.parametrize("variant", ["v1", "v2", "v3"])
def test_autonomous_step_matches_hand(rng, variant):
    cfg = toy_config(N=5)
    ro = toy_readout(cfg, variant)
    th = rng.random(5) * 6
    h = 0.02
    full = rk4_by_hand(lambda x: pairwise_field(x, cfg, feedback(x, ro)), th, h)
    np.testing.assert_allclose(rk4_autonomous_step(th, cfg, ro, h), full, atol=1e-14)
    u0 = feedback(th, ro)
    frozen = rk4_by_hand(lambda x: pairwise_field(x, cfg, u0), th, h)
    np.testing.assert_allclose(rk4_rk1_step(th, cfg, ro, h), frozen, atol=1e-14)


def test_rk4_rk1_differs_at_second_order(rng):
    cfg = toy_config(N=50, M=3, K=20.0, F=30.0, c=1.1)
    ro = toy_readout(cfg, scale=0.05)
    th = rng.random(50) * 6
    hs = [0.01, 0.005, 0.0025]
    d = [np.max(np.abs(rk4_rk1_step(th, cfg, ro, h) - rk4_autonomous_step(th, cfg, ro, h))) for h in hs]
    ratios = np.array(d[:-1]) / np.array(d[1:])
    assert np.all((ratios >= 2) & (ratios <= 8))


def test_generic_step():
    x = np.array([1.0, -2.0])
    np.testing.assert_array_equal(rk4_generic_step(x, lambda t, y: np.zeros(2), 0.0, 0.1), x)
    for h in (0.1, 0.05):
        got = rk4_generic_step(np.array([1.0]), lambda t, y: y, 0.0, h)[0]
        assert abs(got - math.exp(h)) < h**5 / 100


def _lorenz_ref(x, p=(10.0, 28.0, 8.0 / 3.0)):
    s, r, b = p
    return np.array([s * (x[1] - x[0]), x[0] * (r - x[2]) - x[1], x[0] * x[1] - b * x[2]])


def test_generic_step_lorenz(rng):
    x = rng.standard_normal(3) * 10
    p = LorenzParams().array()
    got = rk4_generic_step(x, lambda t, y: lorenz_rhs(y, p), 0.0, 0.01)
    np.testing.assert_allclose(got, rk4_by_hand(_lorenz_ref, x, 0.01), atol=1e-13)


def test_sampler_hold_and_linear():
    vals = np.array([[0.0], [2.0], [4.0]])
    np.testing.assert_array_equal(InputSampler.from_samples(vals, 1.0).grid[:, 0], [0, 0, 2, 2, 4])
    np.testing.assert_array_equal(InputSampler.from_samples(vals, 1.0, mode="linear").grid[:, 0], [0, 1, 2, 3, 4])
    with pytest.raises(InvalidArgument):
        InputSampler.from_samples(vals, 1.0, mode="cubic")


def test_sampler_window_bounds():
    s = InputSampler(np.zeros((11, 1)), 0.1)
    assert s.n_steps == 5
    assert s.window(1, 4).shape == (9, 1)
    with pytest.raises(InvalidArgument):
        s.window(2, 4)
    with pytest.raises(InvalidArgument):
        s.index(0.05)


@settings(max_examples=50)
@given(st.floats(1e-3, 1.0), st.integers(0, 50), st.integers(1, 500), st.integers(0, 50))
def test_schedule_counts_roundtrip(h, nw, nt, ns):
    s = StepSchedule.from_counts(h, nw, nt, ns)
    assert (s.n_wipe, s.n_train, s.n_test) == (nw, nt, ns)
    assert s.n_total == nw + nt + ns


def test_schedule_rejects_off_grid():
    with pytest.raises(InvalidArgument):
        StepSchedule(0.01, 0.01, 25.005, 100.0, 2.0)
    with pytest.raises(InvalidArgument):
        StepSchedule(0.0, 0.01, 1.0, 1.0, 1.0)

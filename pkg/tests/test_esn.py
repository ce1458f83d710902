import numpy as np
import pytest

from kuramoto_rc.errors import InvalidArgument
from kuramoto_rc.esn import EsnConfig, esn_narma10, esn_states, esn_step, grid_search
from kuramoto_rc.tasks import narma10_series


def test_zero_weights_zero_state():
    W, w_in = np.zeros((4, 4)), np.zeros(4)
    np.testing.assert_array_equal(esn_step(np.zeros(4), (W, w_in), 0.0), 0)


@pytest.mark.parametrize("rho", [0.6, 0.95, 1.2])
def test_spectral_radius_by_power_iteration(rho):
    W, _ = EsnConfig(40, rho, 0.5, seed=1).weights
    assert max(abs(np.linalg.eigvals(W))) == pytest.approx(rho, abs=1e-6)
    # independent check: the growth rate ||W^k x||^(1/k) tends to the radius
    k = 400
    x = np.ones(40)
    log_growth = 0.0
    for _ in range(k):
        x = W @ x
        n = np.linalg.norm(x)
        log_growth += np.log(n)
        x /= n
    assert np.exp(log_growth / k) == pytest.approx(rho, rel=0.05)


def test_step_matches_hand(rng):
    cfg = EsnConfig(5, 0.9, 0.3, seed=2)
    W, w_in = cfg.weights
    x = rng.standard_normal(5)
    expect = np.array([np.tanh(sum(W[i, j] * x[j] for j in range(5)) + w_in[i] * 0.7) for i in range(5)])
    np.testing.assert_allclose(esn_step(x, cfg, 0.7), expect, atol=1e-14)


def test_states_from_zero(rng):
    cfg = EsnConfig(6, 0.9, 0.3)
    u = rng.uniform(-1, 1, 10)
    X = esn_states(cfg, u)
    x = np.zeros(6)
    for k in range(10):
        x = esn_step(x, cfg, u[k])
        np.testing.assert_allclose(X[k], x, atol=1e-15)


def test_constant_target_fit_by_bias():
    u = np.random.default_rng(0).uniform(-1, 1, 600)
    y = np.full(600, 0.3)
    assert esn_narma10(EsnConfig(10, 0.9, 0.5, epsilon=1e-8), (u, y), 300, 200, 50) < 1e-10


def test_small_esn_narma():
    u, y = narma10_series(5, 4500)
    best, cfg, results = grid_search(10, (u, y), 2000, 2000, rhos=(0.8, 0.9), sigmas=(0.1, 0.25), epsilons=(1e-8, 1e-6))
    assert len(results) == 4
    assert best < 1e-2
    assert cfg.N == 10


def test_config_validation():
    with pytest.raises(InvalidArgument):
        EsnConfig(0, 0.9, 0.1)
    with pytest.raises(InvalidArgument):
        esn_narma10(EsnConfig(5, 0.9, 0.1), (np.zeros(10), np.zeros(10)), 10, 10)

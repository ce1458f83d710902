import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import lorenz_inputs, lorenz_run, toy_config
from kuramoto_rc.errors import InvalidArgument, NumericalError
from kuramoto_rc.integrators import InputSampler, StepSchedule
from kuramoto_rc.pipeline import (
    continue_closed_loop,
    load_weights,
    make_sampler,
    nmse,
    readout_benchmark,
    ridge_solve,
    run_experiment,
    sample_parameters,
    save_weights,
)
from kuramoto_rc.readout import ReadoutSpec, ReadoutWeights, readout_features
from kuramoto_rc.tasks import SignalSeries


def test_readout_features_examples():
    np.testing.assert_allclose(readout_features([0, np.pi / 2], ReadoutSpec("v3")), [1, 0, 1, 0, 1], atol=1e-15)
    np.testing.assert_allclose(readout_features([0.0], ReadoutSpec("v2")), [1, 0, 1])


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-10, 10)))
def test_readout_features_v1_elementwise(theta):
    f = readout_features(theta, ReadoutSpec("v1"))
    assert f.shape == (theta.size + 1,) and f[0] == 1
    np.testing.assert_array_equal(f[1:], np.sin(theta))


@pytest.mark.parametrize("variant,n", [("v1", 11), ("v2", 21), ("v3", 21)])
def test_feature_counts(variant, n):
    spec = ReadoutSpec(variant)
    assert spec.n_features(10) == n
    assert readout_features(np.zeros((4, 10)), spec).shape == (4, n)


def test_ridge_identity():
    U = np.arange(12.0).reshape(2, 6)
    np.testing.assert_allclose(ridge_solve(np.eye(6), U, 0.0).W, U, atol=1e-14)
    np.testing.assert_allclose(ridge_solve(np.eye(6), U, 0.25).W, U / 1.25, atol=1e-14)


def test_ridge_matches_augmented_lstsq(rng):
    Phi = rng.standard_normal((7, 50))
    U = rng.standard_normal((2, 50))
    eps = 1e-5
    # ridge = ordinary least squares on the system augmented with sqrt(eps) I
    A = np.vstack([Phi.T, np.sqrt(eps) * np.eye(7)])
    b = np.vstack([U.T, np.zeros((7, 2))])
    ref = np.linalg.lstsq(A, b, rcond=None)[0].T
    got = ridge_solve(Phi, U, eps).W
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) <= 1e-8


def test_ridge_singular_without_regularisation():
    Phi = np.ones((3, 10))
    with pytest.raises(NumericalError, match="condition"):
        ridge_solve(Phi, np.ones((1, 10)), 0.0)


def test_ridge_tiny_epsilon_falls_back(rng):
    # rank-deficient Gram with eps far below rounding level still gives the ridge solution
    base = rng.standard_normal((3, 200))
    Phi = np.vstack([base, base[:1] + base[1:2], 1e3 * base[2:3]])
    U = rng.standard_normal((1, 200))
    W = ridge_solve(Phi, U, 1e-14).W
    assert np.all(np.isfinite(W))
    assert np.linalg.norm(W @ Phi - U) <= np.linalg.norm(np.linalg.lstsq(Phi.T, U.T, rcond=None)[0].T @ Phi - U) * (1 + 1e-6)


def test_ridge_validation():
    with pytest.raises(InvalidArgument):
        ridge_solve(np.ones((2, 5)), np.ones((1, 4)), 1e-3)
    with pytest.raises(InvalidArgument):
        ridge_solve(np.ones((2, 5)), np.ones((1, 5)), -1.0)


def test_nmse_examples():
    u = np.array([[1.0], [1.0]])
    assert nmse(u, u) == 0
    assert nmse(np.zeros_like(u), u) == 1
    assert nmse(np.array([[0.0], [2.0]]), u) == 1
    with pytest.raises(InvalidArgument):
        nmse(np.zeros((3, 1)), np.zeros((3, 1)))


@settings(max_examples=50)
@given(arrays(np.float64, (20, 3), elements=st.floats(-5, 5)), st.floats(0.1, 10))
def test_nmse_scale_invariant(u, a):
    u = u + 0.5  # keep every component away from zero energy
    p = np.roll(u, 1, axis=0)
    assert nmse(a * p, a * u) == pytest.approx(nmse(p, u), rel=1e-9)


def test_make_sampler_modes():
    sched = StepSchedule.from_counts(0.01, 1, 1, 1)
    half = make_sampler(SignalSeries(0.0, 0.005, np.arange(9.0)), sched)
    np.testing.assert_array_equal(half.grid[:, 0], np.arange(9.0))
    hold = make_sampler(SignalSeries(0.0, 0.01, np.arange(5.0)), sched)
    np.testing.assert_array_equal(hold.grid[:, 0], [0, 0, 1, 1, 2, 2, 3, 3, 4])
    with pytest.raises(InvalidArgument):
        make_sampler(SignalSeries(0.0, 0.03, np.arange(5.0)), sched)


def test_zero_input_gives_zero_weights(rng):
    from kuramoto_rc.dynamics import driven_field  # noqa: F401  (forces kernel import)
    from kuramoto_rc.pipeline import _Gram

    cfg = toy_config(N=20, M=2, K=2.0, F=5.0)
    sampler = InputSampler(np.zeros((401, 2)), 0.01)
    states = np.empty((200, 20))
    from kuramoto_rc import _backend

    _backend.kernels().driven_trajectory(rng.random(20), cfg.net, sampler.window(0, 200), 0.01, 200, 0, states)
    g = _Gram(41, 2)
    g.add(readout_features(states, ReadoutSpec("v3")), np.zeros((200, 2)))
    W, _ = g.solve(1e-5)
    assert np.all(W == 0)


def test_lorenz_table_configuration(lorenz_table_run):
    res = lorenz_table_run
    assert res.nmse < 1e-2
    assert res.prediction.values.shape == (200, 3)
    assert res.prediction.t0 == pytest.approx(100.0)
    assert np.all(res.train_nmse < 1e-3)


def test_lorenz_without_forcing_fails():
    res = lorenz_run(N=300, F=0.0, T_train=40.0)
    assert res.nmse >= 0.1


def test_testing_resumes_from_training_state(lorenz_table_run):
    tr = lorenz_table_run.trained
    pred, r, final = continue_closed_loop(tr, 200)
    np.testing.assert_array_equal(pred, lorenz_table_run.prediction.values)
    np.testing.assert_array_equal(final, lorenz_table_run.final_state)
    assert np.all((r > 0) & (r <= 1))


def test_run_is_deterministic():
    a = lorenz_run(N=100, T_train=20.0, seed=3)
    b = lorenz_run(N=100, T_train=20.0, seed=3)
    np.testing.assert_array_equal(a.prediction.values, b.prediction.values)
    np.testing.assert_array_equal(a.trained.weights.W, b.trained.weights.W)


def test_chunking_does_not_change_fit():
    a = lorenz_run(N=100, T_train=20.0, chunk=2000)
    b = lorenz_run(N=100, T_train=20.0, chunk=333)
    # summation order differs, so compare what the readout produces rather than raw weights
    np.testing.assert_allclose(a.train_nmse, b.train_nmse, rtol=1e-5)
    np.testing.assert_allclose(a.prediction.values[:20], b.prediction.values[:20], atol=1e-6)


def test_rk4_rk1_closed_loop_mode_runs():
    a = lorenz_run(N=200, T_train=30.0, closed_loop_mode="rk4_rk1")
    assert a.trained.closed_loop_mode == "rk4_rk1"
    assert np.all(np.isfinite(a.prediction.values))
    with pytest.raises(InvalidArgument):
        lorenz_run(N=50, T_train=1.0, closed_loop_mode="euler")


def test_input_dimension_mismatch():
    cfg = toy_config(N=10, M=2)
    sched = StepSchedule.from_counts(0.01, 1, 5, 1)
    series = SignalSeries(0.0, 0.005, np.zeros((20, 3)))
    with pytest.raises(InvalidArgument, match="M="):
        run_experiment(cfg, ReadoutSpec(), sched, series, 1e-5)


def test_weights_roundtrip(tmp_path, rng):
    w = ReadoutWeights(rng.standard_normal((3, 21)), ReadoutSpec("v2"), 1e-7)
    save_weights(tmp_path / "w.txt", w, 42, ["hello"])
    back, seed = load_weights(tmp_path / "w.txt")
    assert seed == 42 and back.spec == w.spec and back.epsilon == 1e-7
    np.testing.assert_array_equal(back.W, w.W)
    buf = io.StringIO()
    save_weights(buf, w)
    assert buf.getvalue().splitlines()[0] == "M = 3"


def test_sample_parameters_in_range():
    p = sample_parameters(500, {"c": (0.5, 1.5), "F": (5, 60), "K": (0, 40)}, 1)
    assert p.shape == (500, 3)
    assert p[:, 0].min() >= 0.5 and p[:, 2].max() <= 40
    np.testing.assert_array_equal(p, sample_parameters(500, {"c": (0.5, 1.5), "F": (5, 60), "K": (0, 40)}, 1))


def test_benchmark_degenerate_range():
    sched = StepSchedule(0.01, 0.01, 25.0, 100.0, 2.0)
    point = {"c": (1.159, 1.159), "F": (37.545, 37.545), "K": (20.68, 20.68)}
    out = readout_benchmark(2, lorenz_inputs(sched), sched, point, variants=("v3",))
    assert out["v3"]["rate"] == 1.0

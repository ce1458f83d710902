import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kuramoto_rc.dynamics import order_parameter
from kuramoto_rc.errors import InvalidArgument, NumericalError
from kuramoto_rc.meanfield import (
    LockedPoint,
    MeanFieldParams,
    MeanFieldState,
    finite_n_crosscheck,
    find_locked_point,
    locked_points,
    oa_driven_field,
    oa_predict_ramp,
    oa_trajectory,
    wrapped_cauchy_phases,
)


@settings(max_examples=50)
@given(st.floats(1e-6, 1.0, exclude_max=True), st.floats(-10, 10), st.floats(-10, 10))
def test_unforced_subcritical_decays(r, psi, u):
    dr, _ = oa_driven_field((r, psi), MeanFieldParams(K=1.0, F=0.0), u)
    assert dr < 0


def test_supercritical_fixed_point():
    p = MeanFieldParams(K=4.0, F=0.0)
    rstar = math.sqrt(1 - 2 / 4)
    assert oa_driven_field((rstar, 0.3), p, 0.0)[0] == pytest.approx(0.0, abs=1e-15)
    traj = oa_trajectory(p, 0.2, 0.0, 0.0, 60.0, 0.01)
    assert abs(traj[-1, 0] - rstar) < 1e-8


@given(st.floats(0, 50), st.floats(0, 50), st.floats(-10, 10), st.floats(-10, 10))
def test_boundary_inflow(K, F, psi, u):
    dr, _ = oa_driven_field((1.0, psi), MeanFieldParams(K=K, F=F), u)
    assert dr == -1.0


def test_floor_and_state_checks():
    with pytest.raises(NumericalError):
        oa_driven_field((1e-13, 0.0), MeanFieldParams(1.0, 1.0), 0.0)
    with pytest.raises(InvalidArgument):
        MeanFieldState(1.5, 0.0)
    with pytest.raises(InvalidArgument):
        MeanFieldParams(K=-1.0, F=0.0)


@pytest.mark.parametrize("K,F", [(1.0, 2.0), (3.0, 1.0), (0.5, 5.0)])
def test_locked_point_at_resonance(K, F):
    # c = omega0 forces sin(phi0) = 0; with phi0 = 0 r0 is a root of a cubic
    lp = find_locked_point(MeanFieldParams(K=K, F=F, omega0=1.0, c=1.0))
    assert lp is not None
    assert lp.phi0 == pytest.approx(0.0, abs=1e-10)
    roots = np.roots([-K / 2, -F / 2, K / 2 - 1, F / 2])
    real = roots[(abs(roots.imag) < 1e-12) & (roots.real > 0) & (roots.real <= 1)].real
    assert np.min(np.abs(real - lp.r0)) < 1e-10


def test_entrained_point_is_stable():
    lp = find_locked_point(MeanFieldParams(K=1.0, F=6.0, omega0=1.0, c=1.0))
    assert lp is not None and lp.stable
    assert all(np.real(ev) < 0 for ev in lp.eigenvalues)


@pytest.mark.parametrize("K", [0.0, 1.0, 1.9])
def test_no_lock_without_forcing(K):
    assert find_locked_point(MeanFieldParams(K=K, F=0.0)) is None


def test_locked_points_are_roots():
    p = MeanFieldParams(K=2.5, F=3.0, omega0=1.0, c=1.7)
    pts = locked_points(p)
    assert pts
    for q in pts:
        dr, dpsi = oa_driven_field((q.r0, q.phi0), p, 0.0)
        assert abs(dr) < 1e-9 and abs(dpsi - p.c) < 1e-9


def test_ramp_from_locked_point_is_exact():
    p = MeanFieldParams(K=1.0, F=6.0, omega0=1.0, c=1.3)
    lp = find_locked_point(p)
    res = oa_predict_ramp(p, 0.0, 20.0, 0.01, r_init=lp.r0, psi_init=lp.phi0, locked=lp)
    assert res.error <= 1e-8


def test_ramp_error_shrinks_with_wipe():
    p = MeanFieldParams(K=1.0, F=6.0, omega0=1.0, c=1.3)
    errs = [oa_predict_ramp(p, T, 10.0, 0.01, r_init=0.2, psi_init=2.0).error for T in (1.0, 2.0, 4.0, 8.0)]
    assert all(b <= a * 1.001 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3 * errs[0]


def test_ramp_refuses_unstable_lock():
    p = MeanFieldParams(K=1.0, F=6.0)
    with pytest.raises(InvalidArgument):
        oa_predict_ramp(p, 1.0, 1.0, 0.01, locked=LockedPoint(0.5, 0.0, False))


def test_wrapped_cauchy_order_parameter():
    th = wrapped_cauchy_phases(200_000, 0.4, 1.0, 0)
    op = order_parameter(th)
    assert op.r == pytest.approx(0.4, abs=0.01)
    assert op.psi == pytest.approx(1.0, abs=0.02)


def test_finite_population_tracks_reduction():
    t, r_n, r_oa = finite_n_crosscheck(MeanFieldParams(K=3.0, F=1.0, omega0=1.0, c=1.0), N=2000, T=10.0)
    assert t.shape == r_n.shape == r_oa.shape
    assert np.max(np.abs(r_n - r_oa)) < 0.1

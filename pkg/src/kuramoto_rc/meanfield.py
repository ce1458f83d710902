"""Ott-Antonsen reduction of the forced Kuramoto model (Cauchy frequencies, width 1).

The reduced state is the complex order parameter ``z = r e^{i psi}`` of an
infinite population with Lorentzian frequencies centred at ``omega0``, forced
by ``F sin(u(t) - theta)``::

    r'   = -r + (K/2) r (1 - r^2) + (F/2) (1 - r^2) cos(psi - u)
    psi' = omega0 - (F/2) (r + 1/r) sin(psi - u)

For a ramp ``u = c t`` the offset ``phi = psi - c t`` obeys an autonomous
planar system whose stable fixed points ("locked points") let the network
continue the ramp without any trained readout: ``u_hat(t) = psi(t) - phi0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .dynamics import ReservoirConfig
from .errors import InvalidArgument, NumericalError
from .integrators import InputSampler, rk4_trajectory

R_FLOOR = 1e-12

jit = _backend.jit


@dataclass(frozen=True)
class MeanFieldState:
    r: float
    psi: float

    def __post_init__(self):
        if not R_FLOOR < self.r <= 1.0:
            raise InvalidArgument(f"r = {self.r} outside (1e-12, 1]")


@dataclass(frozen=True)
class MeanFieldParams:
    K: float
    F: float
    omega0: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.K < 0 or self.F < 0:
            raise InvalidArgument("need K, F >= 0")

    def array(self) -> np.ndarray:
        return np.array([self.K, self.F, self.omega0, self.c])


@dataclass(frozen=True)
class LockedPoint:
    r0: float
    phi0: float
    stable: bool
    eigenvalues: tuple = ()


def oa_driven_field(state, params: MeanFieldParams, u_t: float) -> tuple[float, float]:
    """``(dr, dpsi)`` at ``state = (r, psi)`` under input phase ``u_t``."""
    r, psi = (state.r, state.psi) if isinstance(state, MeanFieldState) else (float(state[0]), float(state[1]))
    if not r > R_FLOOR:
        raise NumericalError(f"r = {r!r} reached the floor 1e-12; the reduced description breaks down")
    if r > 1.0:
        raise InvalidArgument("r must not exceed 1")
    K, F, w0 = params.K, params.F, params.omega0
    d = psi - u_t
    one = 1.0 - r * r
    dr = -r + 0.5 * K * r * one + 0.5 * F * one * math.cos(d)
    dpsi = w0 - 0.5 * F * (r + 1.0 / r) * math.sin(d)
    return dr, dpsi


def _locked_residual(x, p):
    r, phi = x
    K, F, w0, c = p
    one = 1.0 - r * r
    return np.array(
        [
            -r + 0.5 * K * r * one + 0.5 * F * one * math.cos(phi),
            w0 - c - 0.5 * F * (r + 1.0 / r) * math.sin(phi),
        ]
    )


def _locked_jacobian(x, p):
    r, phi = x
    K, F, _, _ = p
    sp, cp = math.sin(phi), math.cos(phi)
    return np.array(
        [
            [-1.0 + 0.5 * K * (1.0 - 3.0 * r * r) - F * r * cp, -0.5 * F * (1.0 - r * r) * sp],
            [-0.5 * F * (1.0 - 1.0 / (r * r)) * sp, -0.5 * F * (r + 1.0 / r) * cp],
        ]
    )


def _newton(x, p, tol=1e-13, max_iter=100):
    g = _locked_residual(x, p)
    for _ in range(max_iter):
        nrm = np.linalg.norm(g)
        if nrm <= tol:
            return x
        step = np.linalg.lstsq(_locked_jacobian(x, p), -g, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            y = x + lam * step
            y[0] = min(max(y[0], 1e-6), 1.0)
            gy = _locked_residual(y, p)
            if np.linalg.norm(gy) < nrm:
                x, g = y, gy
                break
            lam *= 0.5
        else:
            return None
    return x if np.linalg.norm(g) <= 1e-10 else None


def locked_points(params: MeanFieldParams) -> list[LockedPoint]:
    """All distinct roots of the ``(r, phi)`` system found from a grid of starts."""
    p = params.array()
    found = []
    for r in np.linspace(0.05, 1.0, 8):
        for phi in np.linspace(-math.pi, math.pi, 12, endpoint=False):
            x = _newton(np.array([r, phi]), p)
            if x is None or not R_FLOOR < x[0] <= 1.0:
                continue
            x[1] = (x[1] + math.pi) % (2.0 * math.pi) - math.pi
            if any(abs(x[0] - q[0]) < 1e-8 and abs(math.remainder(x[1] - q[1], 2 * math.pi)) < 1e-8 for q in found):
                continue
            found.append(x)
    out = []
    for r0, phi0 in found:
        ev = np.linalg.eigvals(_locked_jacobian((r0, phi0), p))
        out.append(LockedPoint(float(r0), float(phi0), bool(np.all(ev.real < 0)), tuple(ev)))
    return out


def find_locked_point(params: MeanFieldParams) -> LockedPoint | None:
    """A stable locked point if one exists, else any root, else ``None``."""
    pts = locked_points(params)
    if not pts:
        return None
    stable = [q for q in pts if q.stable]
    return max(stable or pts, key=lambda q: q.r0)


@jit
def _oa_rhs(x, p):
    # x = (r, psi, t); p = (K, F, omega0, c, mode, phi0); mode 0 ramp-driven, 1 autonomous
    r = x[0]
    if p[4] == 0.0:
        d = x[1] - p[3] * x[2]
    else:
        d = p[5]
    one = 1.0 - r * r
    out = np.empty(3)
    out[0] = -r + 0.5 * p[0] * r * one + 0.5 * p[1] * one * np.cos(d)
    out[1] = p[2] - 0.5 * p[1] * (r + 1.0 / r) * np.sin(d)
    out[2] = 1.0
    return out


def oa_trajectory(params: MeanFieldParams, r0: float, psi0: float, t0: float, T: float, h: float,
                  mode: str = "driven", phi0: float = 0.0) -> np.ndarray:
    """RK4 trajectory rows ``(r, psi, t)`` from ``t0`` over ``T``.

    ``mode="driven"`` uses ``u = c t``; ``mode="autonomous"`` feeds back
    ``u_hat = psi - phi0``.
    """
    MeanFieldState(r0, psi0)
    n = int(round(T / h))
    p = np.array([params.K, params.F, params.omega0, params.c, 0.0 if mode == "driven" else 1.0, phi0])
    out = rk4_trajectory(_oa_rhs, np.array([r0, psi0, t0]), p, h, n)
    if out[:, 0].min() <= R_FLOOR:
        raise NumericalError("r fell below the floor 1e-12")
    return out


@dataclass(frozen=True)
class RampPrediction:
    times: np.ndarray
    prediction: np.ndarray
    error: float
    locked: LockedPoint


def oa_predict_ramp(params: MeanFieldParams, T_wipe: float, T_test: float, h: float,
                    r_init: float = 0.5, psi_init: float = 0.0, locked: LockedPoint | None = None) -> RampPrediction:
    """Drive the reduced system with ``u = c t`` over ``[-T_wipe, 0]``, then run it
    autonomously with ``u_hat = psi - phi0`` over ``[0, T_test]``.

    ``error`` is the sup over the test window of ``|u_hat - c t|`` taken
    modulo ``2 pi``.
    """
    locked = locked or find_locked_point(params)
    if locked is None or not locked.stable:
        raise InvalidArgument("no stable locked point for these parameters")
    r, psi = r_init, psi_init
    if T_wipe > 0:
        wipe = oa_trajectory(params, r, psi, -T_wipe, T_wipe, h)
        r, psi = wipe[-1, 0], wipe[-1, 1]
    test = oa_trajectory(params, r, psi, 0.0, T_test, h, "autonomous", locked.phi0)
    t = test[:, 2]
    pred = test[:, 1] - locked.phi0
    # the input enters only through its phase, so the branch of psi is arbitrary
    err = np.abs(np.angle(np.exp(1j * (pred - params.c * t))))
    return RampPrediction(t, pred, float(err.max()), locked)


def wrapped_cauchy_phases(N: int, r0: float, psi0: float, seed: int) -> np.ndarray:
    """Phases from the Poisson kernel with mean resultant ``r0 e^{i psi0}``.

    Such a population lies on the reduced manifold, so its order parameter
    follows the reduced equations as ``N`` grows.
    """
    if not 0.0 <= r0 < 1.0:
        raise InvalidArgument("r0 must lie in [0, 1)")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 4])))
    gamma = -math.log(r0) if r0 > 0 else np.inf
    if not np.isfinite(gamma):
        return 2.0 * np.pi * rng.random(N)
    return psi0 + gamma * np.tan(np.pi * (rng.random(N) - 0.5))


def finite_n_crosscheck(params: MeanFieldParams, N: int = 10_000, T: float = 20.0, h: float = 0.01,
                        r0: float = 0.3, psi0: float = 0.0, seed: int = 0):
    """Order parameter of ``N`` oscillators vs the reduced trajectory.

    Returns ``(times, r_finite, r_reduced)``.  The finite system uses the
    reservoir kernels with ``M = 1``, unit input gain and input ``u = c t``.
    """
    from .dynamics import sample_frequencies

    omega = sample_frequencies("cauchy", N, seed, omega0=params.omega0, delta0=1.0).omega
    cfg = ReservoirConfig(N, 1, params.K, params.F, 1.0, omega, np.zeros(N, dtype=np.int64))
    theta0 = wrapped_cauchy_phases(N, r0, psi0, seed)
    n = int(round(T / h))
    grid = params.c * (np.arange(2 * n + 1) * 0.5 * h)
    sampler = InputSampler.from_half_grid(grid, h)
    states = np.empty((n, N))
    last = _backend.kernels().driven_trajectory(theta0, cfg.net, sampler.window(0, n), h, n, 0, states)
    z = np.exp(1j * np.vstack([states, last[None, :]])).mean(axis=1)
    oa = oa_trajectory(params, float(abs(z[0])), float(np.angle(z[0])), 0.0, T, h)
    return oa[:, 2], np.abs(z), oa[:, 0]


__all__ = [
    "R_FLOOR",
    "MeanFieldState",
    "MeanFieldParams",
    "LockedPoint",
    "oa_driven_field",
    "locked_points",
    "find_locked_point",
    "oa_trajectory",
    "RampPrediction",
    "oa_predict_ramp",
    "wrapped_cauchy_phases",
    "finite_n_crosscheck",
]

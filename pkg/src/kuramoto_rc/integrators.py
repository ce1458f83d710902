"""Fixed-step schemes for the reservoir and for the target systems.

Input timing follows the reservoir's own clock: reservoir step ``i`` consumes
input samples ``u^(i)``, ``u^(i+1/2)`` and ``u^(i+1)`` of the input series,
whatever the input's physical sample step ``h_u`` is.  With ``h_theta ==
h_u`` this is plain time alignment; otherwise the input is time-rescaled by
``h_theta / h_u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .dynamics import ReservoirConfig, _check, _phases
from .errors import InvalidArgument, NumericalError
from .readout import ReadoutWeights

jit = _backend.jit


def _count(duration: float, step: float, name: str) -> int:
    n = duration / step
    k = int(round(n))
    if abs(n - k) > 1e-9 * max(1.0, n):
        raise InvalidArgument(f"{name} = {duration} is not a multiple of the step {step}")
    return k


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes and phase durations (wipe-out, training, testing)."""

    h_theta: float
    h_u: float
    T_wipe: float
    T_train: float
    T_test: float

    def __post_init__(self):
        if not (self.h_theta > 0 and self.h_u > 0):
            raise InvalidArgument("step sizes must be positive")
        for name in ("T_wipe", "T_train", "T_test"):
            _count(getattr(self, name), self.h_theta, name)

    @classmethod
    def from_counts(cls, h_theta, n_wipe, n_train, n_test, h_u=None) -> StepSchedule:
        return cls(h_theta, h_u or h_theta, n_wipe * h_theta, n_train * h_theta, n_test * h_theta)

    @property
    def n_wipe(self) -> int:
        return _count(self.T_wipe, self.h_theta, "T_wipe")

    @property
    def n_train(self) -> int:
        return _count(self.T_train, self.h_theta, "T_train")

    @property
    def n_test(self) -> int:
        return _count(self.T_test, self.h_theta, "T_test")

    @property
    def n_total(self) -> int:
        return self.n_wipe + self.n_train + self.n_test


class InputSampler:
    """Input values on the half-step grid ``t0 + j*h/2``.

    Row ``2 i`` of :attr:`grid` is ``u^(i)`` and row ``2 i + 1`` is
    ``u^(i + 1/2)``.  Build it from a series already sampled at ``h/2``
    (:meth:`from_half_grid`) or from a series sampled at ``h`` with the
    midpoints filled by zero-order hold or linear interpolation.
    """

    def __init__(self, grid, h: float, t0: float = 0.0):
        grid = np.ascontiguousarray(grid, dtype=np.float64)
        if grid.ndim == 1:
            grid = grid[:, None]
        if grid.shape[0] % 2 == 0:
            grid = grid[:-1]
        self.grid = grid
        self.h = float(h)
        self.t0 = float(t0)

    @classmethod
    def from_half_grid(cls, values, h, t0=0.0):
        return cls(values, h, t0)

    @classmethod
    def from_samples(cls, values, h, t0=0.0, mode="hold"):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        grid = np.empty((2 * len(values) - 1, values.shape[1]))
        grid[0::2] = values
        if mode == "hold":
            grid[1::2] = values[:-1]
        elif mode == "linear":
            grid[1::2] = 0.5 * (values[:-1] + values[1:])
        else:
            raise InvalidArgument(f"unknown interpolation mode {mode!r}")
        return cls(grid, h, t0)

    @property
    def M(self) -> int:
        return self.grid.shape[1]

    @property
    def n_steps(self) -> int:
        """Number of full steps the grid supports."""
        return (self.grid.shape[0] - 1) // 2

    def index(self, t: float) -> int:
        i = (t - self.t0) / self.h
        k = int(round(i))
        if abs(i - k) > 1e-9 * max(1.0, abs(i)):
            raise InvalidArgument(f"t = {t} is not on the sampling grid")
        return k

    def window(self, start: int, n: int) -> np.ndarray:
        """Rows for steps ``start .. start + n - 1`` (``2 n + 1`` half-grid rows)."""
        if start < 0 or start + n > self.n_steps:
            raise InvalidArgument(
                f"input covers {self.n_steps} steps, steps {start}..{start + n - 1} requested"
            )
        return self.grid[2 * start : 2 * (start + n) + 1]

    def sample(self, i: int) -> np.ndarray:
        return self.grid[2 * i]


def _step_driven(state, cfg, sampler, t, h, scheme):
    theta = _phases(state)
    _check(theta, cfg)
    if sampler.M != cfg.M:
        raise InvalidArgument("sampler dimension does not match M")
    U = sampler.window(sampler.index(t), 1)
    no_states = np.empty((0, cfg.N))
    return _backend.kernels().driven_trajectory(theta, cfg.net, U, float(h), 1, scheme, no_states)


def rk4_driven_step(state, cfg: ReservoirConfig, sampler: InputSampler, t: float, h: float):
    """One RK4 step of the driven network; stages 2 and 3 share ``u^(i+1/2)``."""
    return _step_driven(state, cfg, sampler, t, h, 0)


def rk1_driven_step(state, cfg: ReservoirConfig, sampler: InputSampler, t: float, h: float):
    """Explicit Euler step using ``u^(i)`` only (for discontinuous inputs)."""
    return _step_driven(state, cfg, sampler, t, h, 1)


def _step_closed(state, cfg, readout, h, scheme):
    theta = _phases(state)
    _check(theta, cfg)
    readout.check(cfg.N, cfg.M)
    pred = np.empty((1, cfg.M))
    r = np.empty(1)
    return _backend.kernels().closed_trajectory(
        theta, cfg.net, readout.W, readout.spec.code, float(h), 1, scheme, pred, r
    )


def rk4_autonomous_step(state, cfg: ReservoirConfig, readout: ReadoutWeights, h: float):
    """RK4 step of the autonomous network, feedback re-evaluated at every stage."""
    return _step_closed(state, cfg, readout, h, 0)


def rk4_rk1_step(state, cfg: ReservoirConfig, readout: ReadoutWeights, h: float):
    """RK4 in the phases with the feedback frozen at the step's initial state."""
    return _step_closed(state, cfg, readout, h, 1)


def rk4_generic_step(x, field, t: float, h: float):
    """Classical RK4 step for ``x' = field(t, x)``."""
    x = np.asarray(x, dtype=np.float64)
    k1 = np.asarray(field(t, x))
    k2 = np.asarray(field(t + 0.5 * h, x + 0.5 * h * k1))
    k3 = np.asarray(field(t + 0.5 * h, x + 0.5 * h * k2))
    k4 = np.asarray(field(t + h, x + h * k3))
    if not all(np.all(np.isfinite(k)) for k in (k1, k2, k3, k4)):
        raise NumericalError(f"non-finite vector field near t = {t}")
    return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


@jit
def _rk4_trajectory(field, x0, p, h, n_steps, every):
    n_out = n_steps // every + 1
    out = np.empty((n_out, x0.size))
    x = x0.copy()
    out[0] = x
    r = 1
    for i in range(n_steps):
        k1 = field(x, p)
        k2 = field(x + 0.5 * h * k1, p)
        k3 = field(x + 0.5 * h * k2, p)
        k4 = field(x + h * k3, p)
        x = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if (i + 1) % every == 0:
            out[r] = x
            r += 1
    return out


def rk4_trajectory(field, x0, params, h: float, n_steps: int, every: int = 1) -> np.ndarray:
    """Integrate an autonomous ``x' = field(x, params)``; keep every ``every``-th state.

    ``field`` must be compiled with :func:`kuramoto_rc._backend.jit` so that
    the loop runs under the active backend.  Row 0 is ``x0``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    out = _rk4_trajectory(field, x0, params, float(h), int(n_steps), int(every))
    if not np.all(np.isfinite(out)):
        raise NumericalError("trajectory blew up")
    return out


def observed_order(errors, steps) -> np.ndarray:
    """Convergence orders ``log(e_k / e_{k+1}) / log(h_k / h_{k+1})``."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(steps, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


__all__ = [
    "StepSchedule",
    "InputSampler",
    "rk4_driven_step",
    "rk1_driven_step",
    "rk4_autonomous_step",
    "rk4_rk1_step",
    "rk4_generic_step",
    "rk4_trajectory",
    "observed_order",
]

"""Benchmark input series: Lorenz, Rössler, Mackey-Glass, Kuramoto-Sivashinsky, NARMA10."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .errors import InvalidArgument, NumericalError
from .integrators import rk4_trajectory

jit = _backend.jit

LORENZ_SCALE = 30.92


@dataclass(frozen=True)
class SignalSeries:
    """Uniformly sampled ``T x M`` series starting at ``t0``.

    ``scale`` records the divisor already applied to ``values``.
    """

    t0: float
    h: float
    values: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if not self.h > 0 or not self.scale > 0:
            raise InvalidArgument("sample step and scale must be positive")
        if not np.all(np.isfinite(values)):
            raise NumericalError("series contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self))

    def decimate(self, every: int) -> SignalSeries:
        return replace(self, h=self.h * every, values=self.values[::every])

    def to_csv(self, path, comments: list[str] | None = None) -> None:
        with open(path, "w", newline="") as fh:
            for line in comments or []:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t"] + [f"u{j + 1}" for j in range(self.M)])
            for t, row in zip(self.times.tolist(), self.values.tolist()):
                w.writerow([repr(t)] + [repr(x) for x in row])

    @classmethod
    def from_csv(cls, path, scale: float = 1.0) -> SignalSeries:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
        data = np.array([[float(x) for x in r] for r in rows[1:]])
        t = data[:, 0]
        h = float(t[1] - t[0]) if len(t) > 1 else 1.0
        return cls(float(t[0]), h, data[:, 1:], scale)


def scale_input(series: SignalSeries, divisor: float) -> SignalSeries:
    """Divide the values by ``divisor`` and record the accumulated scale."""
    if not divisor > 0:
        raise InvalidArgument("divisor must be positive")
    return replace(series, values=series.values / divisor, scale=series.scale * divisor)


# --- ODE targets ------------------------------------------------------------


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0

    def array(self):
        return np.array([self.sigma, self.rho, self.beta])


@dataclass(frozen=True)
class RosslerParams:
    a: float = 0.2
    b: float = 0.2
    c: float = 5.7

    def array(self):
        return np.array([self.a, self.b, self.c])


@jit
def lorenz_rhs(x, p):
    out = np.empty(3)
    out[0] = p[0] * (x[1] - x[0])
    out[1] = x[0] * (p[1] - x[2]) - x[1]
    out[2] = x[0] * x[1] - p[2] * x[2]
    return out


@jit
def lorenz_jac(x, p):
    J = np.zeros((3, 3))
    J[0, 0] = -p[0]
    J[0, 1] = p[0]
    J[1, 0] = p[1] - x[2]
    J[1, 1] = -1.0
    J[1, 2] = -x[0]
    J[2, 0] = x[1]
    J[2, 1] = x[0]
    J[2, 2] = -p[2]
    return J


@jit
def rossler_rhs(x, p):
    out = np.empty(3)
    out[0] = -x[1] - x[2]
    out[1] = x[0] + p[0] * x[1]
    out[2] = p[1] + x[2] * (x[0] - p[2])
    return out


@jit
def rossler_jac(x, p):
    J = np.zeros((3, 3))
    J[0, 1] = -1.0
    J[0, 2] = -1.0
    J[1, 0] = 1.0
    J[1, 1] = p[0]
    J[2, 0] = x[2]
    J[2, 2] = x[0] - p[2]
    return J


def lorenz_equilibria(params: LorenzParams = LorenzParams()) -> np.ndarray:
    q = math.sqrt(params.beta * (params.rho - 1.0))
    return np.array([[0.0, 0.0, 0.0], [q, q, params.rho - 1.0], [-q, -q, params.rho - 1.0]])


def rossler_equilibria(params: RosslerParams = RosslerParams()) -> np.ndarray:
    """Roots of ``a z^2 - c z + b = 0`` with ``x = a z``, ``y = -z``."""
    a, b, c = params.a, params.b, params.c
    disc = math.sqrt(c * c - 4.0 * a * b)
    zs = [(c - disc) / (2.0 * a), (c + disc) / (2.0 * a)]
    return np.array([[a * z, -z, z] for z in zs])


def _ode_series(rhs, params, x0, h, T, transient, dt, scale):
    every = h / dt
    k = int(round(every))
    if k < 1 or abs(every - k) > 1e-9 * every:
        raise InvalidArgument(f"output step {h} must be a multiple of the generation step {dt}")
    n_skip = int(round(transient / dt))
    n_keep = int(round(T / h))
    traj = rk4_trajectory(rhs, x0, params, dt, n_skip + n_keep * k, 1)
    values = traj[n_skip :: k][:n_keep]
    series = SignalSeries(0.0, h, values)
    return scale_input(series, scale) if scale else series


def lorenz_series(
    params: LorenzParams = LorenzParams(),
    x0=(1.0, 1.0, 1.0),
    h: float = 0.01,
    T: float = 100.0,
    transient: float = 40.0,
    dt: float = 1.0 / 2000.0,
    scale: float | None = LORENZ_SCALE,
) -> SignalSeries:
    """Lorenz trajectory integrated with RK4 at ``dt`` and decimated to ``h``.

    The first sample is the state after ``transient`` time units.
    """
    return _ode_series(lorenz_rhs, params.array(), x0, h, T, transient, dt, scale)


def rossler_series(
    params: RosslerParams = RosslerParams(),
    x0=(1.0, 1.0, 0.0),
    h: float = 0.01,
    T: float = 100.0,
    transient: float = 200.0,
    dt: float = 1.0 / 2000.0,
    scale: float | None = None,
) -> SignalSeries:
    return _ode_series(rossler_rhs, params.array(), x0, h, T, transient, dt, scale)


# --- Mackey-Glass -------------------------------------------------------------


@dataclass(frozen=True)
class MackeyGlassParams:
    a: float = 0.2
    b: float = 0.1
    n: float = 10.0
    tau: float = 17.0


@jit
def _mg_rhs(y, yd, a, b, n):
    return a * yd / (1.0 + yd**n) - b * y


@jit
def _mg_integrate(hist, n_tau, n_steps, h, a, b, n):
    y = np.empty(n_tau + 1 + n_steps)
    y[: n_tau + 1] = hist
    for i in range(n_steps):
        cur = n_tau + i
        d0 = y[i]
        d1 = y[i + 1]
        dm = y[i - 1] if i >= 1 else y[0]
        dp = y[i + 2]
        dhalf = (-dm + 9.0 * d0 + 9.0 * d1 - dp) / 16.0
        x = y[cur]
        k1 = _mg_rhs(x, d0, a, b, n)
        k2 = _mg_rhs(x + 0.5 * h * k1, dhalf, a, b, n)
        k3 = _mg_rhs(x + 0.5 * h * k2, dhalf, a, b, n)
        k4 = _mg_rhs(x + h * k3, d1, a, b, n)
        y[cur + 1] = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return y


def mackey_glass_series(
    params: MackeyGlassParams = MackeyGlassParams(),
    history=1.2,
    h: float = 0.017,
    T: float = 1000.0,
    transient: float = 500.0,
    h_out: float | None = None,
) -> SignalSeries:
    """``dy/dt = a y(t-tau) / (1 + y(t-tau)^n) - b y(t)`` by fixed-step RK4.

    ``tau / h`` must be an integer so delayed values at whole steps are grid
    values; half-step delayed values use 4-point cubic interpolation.
    ``history`` is a constant or an array of ``tau/h + 1`` samples on
    ``[-tau, 0]``.  Output is decimated to ``h_out`` (default ``h``).
    """
    ratio = params.tau / h
    n_tau = int(round(ratio))
    if n_tau < 2 or abs(ratio - n_tau) > 1e-9 * ratio:
        raise InvalidArgument(f"tau / h = {ratio} must be an integer >= 2")
    hist = np.broadcast_to(np.asarray(history, dtype=np.float64), (n_tau + 1,)).copy()
    h_out = h if h_out is None else h_out
    every = int(round(h_out / h))
    if every < 1 or abs(h_out / h - every) > 1e-9 * every:
        raise InvalidArgument("h_out must be a multiple of h")
    n_skip = int(round(transient / h))
    n_keep = int(round(T / h_out))
    y = _mg_integrate(hist, n_tau, n_skip + n_keep * every, h, params.a, params.b, params.n)
    if not np.all(np.isfinite(y)):
        raise NumericalError("Mackey-Glass integration blew up")
    vals = y[n_tau + n_skip :: every][:n_keep]
    return SignalSeries(0.0, h_out, vals)


# --- Kuramoto-Sivashinsky -------------------------------------------------------


@dataclass(frozen=True)
class KSParams:
    L: float = 45.0
    n_grid: int = 128
    M: int = 50
    dt: float = 0.05

    def __post_init__(self):
        if self.n_grid < 8 or self.n_grid & (self.n_grid - 1):
            raise InvalidArgument("n_grid must be a power of two")


class KSSolver:
    """ETDRK4 pseudospectral solver for ``y_t = -y y_x - y_xx - y_xxxx`` on a
    periodic domain, with 2/3-rule dealiasing of the nonlinear term."""

    def __init__(self, params: KSParams = KSParams()):
        self.params = params
        n, L, h = params.n_grid, params.L, params.dt
        self.x = L * np.arange(n) / n
        self.q = 2.0 * np.pi * np.fft.rfftfreq(n, d=L / n)
        q = self.q
        lin = q**2 - q**4
        self.lin = lin
        self.E = np.exp(h * lin)
        self.E2 = np.exp(h * lin / 2.0)
        n_contour = 32
        roots = np.exp(1j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
        LR = h * lin[:, None] + roots[None, :]
        self.Q = h * np.real(np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1))
        self.f1 = h * np.real(np.mean((-4.0 - LR + np.exp(LR) * (4.0 - 3.0 * LR + LR**2)) / LR**3, axis=1))
        self.f2 = h * np.real(np.mean((2.0 + LR + np.exp(LR) * (-2.0 + LR)) / LR**3, axis=1))
        self.f3 = h * np.real(np.mean((-4.0 - 3.0 * LR - LR**2 + np.exp(LR) * (4.0 - LR)) / LR**3, axis=1))
        kmax = n // 2
        self.keep = np.arange(q.size) < (2 * kmax) // 3
        self.g = -0.5j * q * self.keep

    def _nl(self, v):
        y = np.fft.irfft(v, n=self.params.n_grid)
        return self.g * np.fft.rfft(y * y)

    def step(self, v):
        Nv = self._nl(v)
        a = self.E2 * v + self.Q * Nv
        Na = self._nl(a)
        b = self.E2 * v + self.Q * Na
        Nb = self._nl(b)
        c = self.E2 * a + self.Q * (2.0 * Nb - Nv)
        Nc = self._nl(c)
        return self.E * v + Nv * self.f1 + 2.0 * (Na + Nb) * self.f2 + Nc * self.f3

    def tail_fraction(self, v) -> float:
        """Energy share of the top third of the retained (dealiased) modes."""
        e = np.abs(v * self.keep) ** 2
        n_keep = int(self.keep.sum())
        total = e.sum()
        return float(e[(2 * n_keep) // 3 : n_keep].sum() / total) if total > 0 else 0.0

    def probe_indices(self, M: int) -> np.ndarray:
        """Grid index nearest ``i L / M`` for ``i = 1..M`` (periodic)."""
        n, L = self.params.n_grid, self.params.L
        return np.rint(np.arange(1, M + 1) * (L / M) / (L / n)).astype(int) % n


def ks_default_initial(params: KSParams = KSParams()) -> np.ndarray:
    x = params.L * np.arange(params.n_grid) / params.n_grid
    k = 2.0 * np.pi / params.L
    return 0.1 * np.cos(k * x) * (1.0 + np.sin(k * x))


def ks_series(
    params: KSParams = KSParams(),
    y0=None,
    h_out: float = 0.1,
    T: float = 100.0,
    transient: float = 200.0,
    tail_tol: float = 1e-6,
    return_field: bool = False,
):
    """Probe values ``y(t, i L / M)`` sampled every ``h_out`` after ``transient``.

    Raises :class:`NumericalError` when the spectral tail exceeds ``tail_tol``
    of the total energy (grid too coarse).
    """
    solver = KSSolver(params)
    every = h_out / params.dt
    k = int(round(every))
    if k < 1 or abs(every - k) > 1e-9 * every:
        raise InvalidArgument("h_out must be a multiple of the solver step")
    y0 = ks_default_initial(params) if y0 is None else np.asarray(y0, dtype=np.float64)
    v = np.fft.rfft(y0)
    n_skip = int(round(transient / params.dt))
    n_keep = int(round(T / h_out))
    for _ in range(n_skip):
        v = solver.step(v)
    idx = solver.probe_indices(params.M)
    out = np.empty((n_keep, params.M))
    fields = np.empty((n_keep, params.n_grid)) if return_field else None
    worst = 0.0
    for i in range(n_keep):
        y = np.fft.irfft(v, n=params.n_grid)
        out[i] = y[idx]
        if return_field:
            fields[i] = y
        if i % 50 == 0:
            worst = max(worst, solver.tail_fraction(v))
        for _ in range(k):
            v = solver.step(v)
    if not np.all(np.isfinite(out)):
        raise NumericalError("Kuramoto-Sivashinsky integration blew up")
    if worst > tail_tol:
        raise NumericalError(f"spectral tail holds {worst:.2e} of the energy; refine the grid")
    series = SignalSeries(0.0, h_out, out)
    return (series, fields) if return_field else series


# --- NARMA10 -----------------------------------------------------------------


@dataclass(frozen=True)
class NarmaParams:
    alpha: float = 0.3
    beta: float = 0.05
    gamma: float = 1.5
    delta: float = 0.1


@jit
def _narma(v, alpha, beta, gamma, delta):
    T = v.size
    y = np.zeros(T)
    for k in range(T - 1):
        acc = 0.0
        for i in range(10):
            if k - i >= 0:
                acc += y[k - i]
        vd = v[k - 9] if k >= 9 else 0.0
        y[k + 1] = alpha * y[k] + beta * y[k] * acc + gamma * vd * v[k] + delta
    return y


def narma10_from_input(u, params: NarmaParams = NarmaParams()) -> np.ndarray:
    """NARMA10 response to ``u`` in ``[-1, 1]``; ``y[k]`` depends on ``u[:k]``."""
    u = np.asarray(u, dtype=np.float64)
    v = 0.2 * (u + 1.0) / 2.0
    y = _narma(v, params.alpha, params.beta, params.gamma, params.delta)
    if not np.all(np.abs(y) <= 1.0):
        raise NumericalError("NARMA10 response left [-1, 1]")
    return y


def narma10_series(seed: int, T: int, params: NarmaParams = NarmaParams()):
    """Uniform input ``u ~ U[-1, 1]`` and the NARMA10 target, zero history."""
    if T <= 10:
        raise InvalidArgument("T must exceed 10")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    u = rng.uniform(-1.0, 1.0, T)
    return u, narma10_from_input(u, params)

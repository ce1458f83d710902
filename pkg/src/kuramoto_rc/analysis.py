"""Return maps, Jacobians, Lyapunov spectra, rotation numbers and (F, K) sweeps."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .dynamics import ReservoirConfig, _check, _phases
from .errors import InvalidArgument, NumericalError
from .integrators import StepSchedule
from .pipeline import TrainedReservoir, _writer, continue_closed_loop, nmse, run_experiment
from .readout import ReadoutSpec, ReadoutWeights

jit = _backend.jit

LORENZ_EXPONENTS = (0.9056, 0.0, -14.5723)


# --- extrema and return maps ------------------------------------------------------


@dataclass(frozen=True)
class ExtremaSeries:
    times: np.ndarray
    values: np.ndarray
    kind: str
    second_difference_bound: float

    def __len__(self):
        return len(self.values)


def local_extrema(series, kind: str = "min", bound: float = 1e-3, h: float = 1.0, t0: float = 0.0) -> ExtremaSeries:
    """Strict 3-point extrema with parabolic refinement.

    An extremum is dropped when its curvature ``|x[i-1] - 2 x[i] + x[i+1]| / h^2``
    is below ``bound * (max(x) - min(x))``; such points are flat wiggles
    rather than turning points of the signal.
    """
    if kind not in ("min", "max"):
        raise InvalidArgument("kind must be 'min' or 'max'")
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 3:
        raise InvalidArgument("need a 1-D series with at least 3 samples")
    a, b, c = x[:-2], x[1:-1], x[2:]
    hit = (b < a) & (b < c) if kind == "min" else (b > a) & (b > c)
    d2 = a - 2.0 * b + c
    span = float(x.max() - x.min())
    hit &= np.abs(d2) >= bound * span * h * h
    i = np.nonzero(hit)[0]
    a, b, c, d2 = a[i], b[i], c[i], d2[i]
    shift = 0.5 * (a - c) / d2
    values = b - 0.125 * (a - c) ** 2 / d2
    times = t0 + (i + 1 + shift) * h
    return ExtremaSeries(times, values, kind, bound)


def return_map(extrema) -> np.ndarray:
    """Consecutive pairs ``(e_n, e_{n+1})`` as a ``(n-1) x 2`` array."""
    v = np.asarray(extrema.values if isinstance(extrema, ExtremaSeries) else extrema, dtype=np.float64)
    if v.size < 2:
        return np.empty((0, 2))
    return np.column_stack([v[:-1], v[1:]])


# --- Jacobians ---------------------------------------------------------------------


def _prep(state, cfg, readout):
    theta = _phases(state)
    _check(theta, cfg)
    readout.check(cfg.N, cfg.M)
    return theta


def jacobian_dense(state, cfg: ReservoirConfig, readout: ReadoutWeights) -> np.ndarray:
    """``N x N`` Jacobian of the autonomous field."""
    theta = _prep(state, cfg, readout)
    return _backend.kernels().jacobian_dense(theta, cfg.net, readout.W, readout.spec.code)


def jacobian_vector_product(state, cfg: ReservoirConfig, readout: ReadoutWeights, vec) -> np.ndarray:
    """Jacobian times a vector (or each column of an ``N x k`` block) in O(N M k)."""
    theta = _prep(state, cfg, readout)
    V = np.asarray(vec, dtype=np.float64)
    one = V.ndim == 1
    V = np.ascontiguousarray(V[:, None] if one else V)
    if V.shape[0] != cfg.N:
        raise InvalidArgument("vector length does not match N")
    out = _backend.kernels().jacobian_vector_product(theta, cfg.net, readout.W, readout.spec.code, V)
    return out[:, 0] if one else out


# --- Lyapunov spectra --------------------------------------------------------------


@dataclass(frozen=True)
class LyapunovSpectrum:
    exponents: np.ndarray
    horizon: float
    period: int
    drift: float = float("nan")
    history: np.ndarray = field(default=None, repr=False)

    @property
    def converged(self) -> bool:
        return self.drift < 0.01


def _spectrum(ok, logs, history, T, h, period):
    if not ok:
        raise NumericalError("tangent vector collapsed (norm below 1e-300)")
    lam = logs / T
    drift = float("nan")
    if len(history) >= 5:
        n = len(history)
        t = np.minimum(np.arange(1, n + 1) * period, round(T / h)) * h
        running = history / t[:, None]
        drift = float(np.max(np.abs(running[-1] - running[int(0.8 * n)])))
    order = np.argsort(-lam, kind="stable")
    if not np.all(np.isfinite(lam)):
        raise NumericalError("non-finite Lyapunov estimate")
    return LyapunovSpectrum(lam[order], T, period, drift, history[:, order])


def lyapunov_spectrum(
    trained: TrainedReservoir,
    k: int = 3,
    horizon: float | None = None,
    mode: str = "fast",
    period: int = 2,
    theta0=None,
    seed: int = 0,
    backend: str | None = None,
) -> LyapunovSpectrum:
    """Benettin estimate of the ``k`` leading exponents of the autonomous network.

    State and tangents advance together with RK4; tangents are re-orthonormalised
    by modified Gram-Schmidt every ``period`` steps.  ``horizon`` defaults to
    ten training lengths; ``mode="dense"`` forms the full Jacobian each stage.
    """
    cfg, w = trained.cfg, trained.weights
    if not 1 <= k <= cfg.N:
        raise InvalidArgument("need 1 <= k <= N")
    if mode not in ("fast", "dense"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    if period < 1:
        raise InvalidArgument("period must be >= 1")
    h = trained.schedule.h_theta
    T = 10.0 * trained.schedule.T_train if horizon is None else float(horizon)
    n_steps = int(round(T / h))
    if n_steps < 1:
        raise InvalidArgument("horizon shorter than one step")
    theta = trained.final_train_state if theta0 is None else _phases(theta0)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 7])))
    Q0 = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((cfg.N, k)))[0])
    ok, logs, history, _, _ = _backend.kernels(backend).lyapunov_run(
        np.array(theta, dtype=np.float64), cfg.net, w.W, w.spec.code, h, n_steps, Q0, period, mode == "dense"
    )
    return _spectrum(ok, logs, history, n_steps * h, h, period)


@jit
def _ode_lyapunov(rhs, jac, p, x0, Q0, h, n_steps, period):
    x = x0.copy()
    Q = Q0.copy()
    n, k = Q.shape
    logs = np.zeros(k)
    n_orth = (n_steps + period - 1) // period
    history = np.zeros((n_orth, k))
    r = 0
    for i in range(n_steps):
        k1 = rhs(x, p)
        l1 = jac(x, p) @ Q
        xs = x + 0.5 * h * k1
        k2 = rhs(xs, p)
        l2 = jac(xs, p) @ (Q + 0.5 * h * l1)
        xs = x + 0.5 * h * k2
        k3 = rhs(xs, p)
        l3 = jac(xs, p) @ (Q + 0.5 * h * l2)
        xs = x + h * k3
        k4 = rhs(xs, p)
        l4 = jac(xs, p) @ (Q + h * l3)
        x = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        Q = Q + h * (l1 + 2.0 * l2 + 2.0 * l3 + l4) / 6.0
        if (i + 1) % period == 0 or i == n_steps - 1:
            for q in range(k):
                for s in range(q):
                    Q[:, q] -= np.sum(Q[:, s] * Q[:, q]) * Q[:, s]
                nrm = np.sqrt(np.sum(Q[:, q] * Q[:, q]))
                if not nrm > 1e-300:
                    return False, logs, history[:r], x
                Q[:, q] /= nrm
                logs[q] += np.log(nrm)
            history[r, :] = logs
            r += 1
    return True, logs, history[:r], x


def ode_lyapunov_spectrum(
    rhs, jac, params, x0, h: float, horizon: float, k: int | None = None, period: int = 2,
    transient: float = 0.0, seed: int = 0,
) -> LyapunovSpectrum:
    """Benettin spectrum of a small ODE ``x' = rhs(x, p)`` with Jacobian ``jac(x, p)``.

    Both callables must be compiled with :func:`kuramoto_rc._backend.jit`.
    """
    from .integrators import rk4_trajectory

    p = np.asarray(params, dtype=np.float64)
    x = np.asarray(x0, dtype=np.float64)
    if transient > 0:
        x = rk4_trajectory(rhs, x, p, h, int(round(transient / h)), int(round(transient / h)))[-1]
    k = x.size if k is None else k
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 7])))
    Q0 = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((x.size, k)))[0])
    n_steps = int(round(horizon / h))
    ok, logs, history, _ = _ode_lyapunov(rhs, jac, p, x, Q0, float(h), n_steps, int(period))
    return _spectrum(ok, logs, history, n_steps * h, h, period)


# --- rotation numbers and climate ---------------------------------------------------


@dataclass(frozen=True)
class RotationNumbers:
    counts: np.ndarray
    horizon_steps: int

    @property
    def max(self) -> int:
        return int(self.counts.max()) if self.counts.size else 0


def rotation_from_phases(theta_start, theta_end, horizon_steps: int = 0) -> RotationNumbers:
    """``floor(|theta_k(T) - theta_k(0)| / 2 pi)`` for unwrapped phases."""
    d = np.abs(np.asarray(theta_end, dtype=np.float64) - np.asarray(theta_start, dtype=np.float64))
    return RotationNumbers(np.floor(d / (2.0 * np.pi)).astype(np.int64), int(horizon_steps))


def rotation_numbers(trained: TrainedReservoir, horizon_steps: int | None = None, theta0=None) -> RotationNumbers:
    """Winding counts over an autonomous run (default: twice the training length)."""
    n = 2 * trained.schedule.n_train if horizon_steps is None else int(horizon_steps)
    start = trained.final_train_state if theta0 is None else _phases(theta0)
    _, _, end = continue_closed_loop(trained, n, start)
    return rotation_from_phases(start, end, n)


@dataclass(frozen=True)
class ClimateVerdict:
    climate_reproduced: bool
    type_reproduced: bool
    epsilon: float
    exponents: tuple
    target: tuple


def _exps(x):
    return tuple(float(v) for v in (x.exponents if isinstance(x, LyapunovSpectrum) else x))


def climate_check(res, target=LORENZ_EXPONENTS, epsilon: float = 0.02) -> ClimateVerdict:
    """Type: ``l1 > eps``, ``|l2| < eps``, ``l_k < -eps``.  Climate: type plus
    ``|l_i - l_i^target| <= eps`` for ``i = 1, 2``."""
    lam, tgt = _exps(res), _exps(target)
    if len(lam) < 3 or len(tgt) < 3:
        raise InvalidArgument("need at least three exponents")
    typ = lam[0] > epsilon and abs(lam[1]) < epsilon and all(x < -epsilon for x in lam[2:])
    close = abs(lam[0] - tgt[0]) <= epsilon and abs(lam[1] - tgt[1]) <= epsilon
    tail = all(x <= -epsilon for x in lam[2:])
    return ClimateVerdict(bool(close and tail and typ), bool(typ), float(epsilon), lam, tgt)


# --- sweeps -----------------------------------------------------------------------

SWEEP_COLUMNS = ["F", "K", "c", "nmse_short", "rho_max", "lambda1", "lambda2", "lambda3", "climate", "type", "seed", "lyap_drift"]


@dataclass
class SweepBase:
    """Everything shared by the points of an (F, K) grid."""

    N: int
    c: float
    series: object
    schedule: StepSchedule
    epsilon: float = 1e-5
    variant: str = "v3"
    seed: int = 0
    freq: str = "normal"
    freq_params: dict | None = None
    score_time: float = 2.0
    rotation_steps: int | None = None
    lyapunov_horizon: float | None = None
    target: tuple = LORENZ_EXPONENTS
    climate_epsilon: float = 0.02


@dataclass
class SweepRecord:
    F: float
    K: float
    c: float
    nmse_short: float = float("nan")
    rho_max: int = -1
    lambda1: float = float("nan")
    lambda2: float = float("nan")
    lambda3: float = float("nan")
    climate: bool = False
    type: bool = False
    seed: int = 0
    lyap_drift: float = float("nan")
    error: str = ""

    def row(self) -> list:
        return [getattr(self, k) for k in SWEEP_COLUMNS]


def sweep_verdict(spec: LyapunovSpectrum, target=LORENZ_EXPONENTS, epsilon: float = 0.02) -> tuple[bool, bool]:
    """``(climate, type)`` for a sweep record.

    The climate flag also requires a converged spectrum: with drift above the
    tolerance the exponents are not known well enough to match a target.
    """
    v = climate_check(spec, target, epsilon)
    return v.climate_reproduced and spec.converged, v.type_reproduced


def sweep_point(F: float, K: float, base: SweepBase, tasks=("nmse_short", "rotation", "lyapunov")) -> SweepRecord:
    """One grid point; failures are recorded in ``error`` rather than raised."""
    rec = SweepRecord(float(F), float(K), float(base.c), seed=base.seed)
    try:
        cfg = ReservoirConfig.build(
            base.N, base.series.M, K, F, base.c, seed=base.seed, freq=base.freq, freq_params=base.freq_params
        )
        res = run_experiment(cfg, ReadoutSpec(base.variant), base.schedule, base.series, base.epsilon)
        n_score = int(round(base.score_time / base.schedule.h_theta))
        if "nmse_short" in tasks:
            rec.nmse_short = nmse(res.prediction.values[:n_score], res.truth.values[:n_score])
        if "rotation" in tasks:
            rec.rho_max = rotation_numbers(res.trained, base.rotation_steps).max
        if "lyapunov" in tasks:
            spec = lyapunov_spectrum(res.trained, 3, base.lyapunov_horizon)
            rec.lambda1, rec.lambda2, rec.lambda3 = (float(x) for x in spec.exponents)
            rec.lyap_drift = float(spec.drift)
            rec.climate, rec.type = sweep_verdict(spec, base.target, base.climate_epsilon)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        rec.error = str(exc) or type(exc).__name__
    return rec


def sweep(F_values, K_values, base: SweepBase, tasks=("nmse_short", "rotation", "lyapunov"), skip=None, on_record=None):
    """Evaluate every ``(F, K)`` pair with the shared seed of ``base``.

    ``skip`` is a set of ``(F, K)`` pairs already done; ``on_record`` is called
    with each new record (used for incremental, resumable output).
    """
    skip = skip or set()
    out = []
    for F in F_values:
        for K in K_values:
            if (float(F), float(K)) in skip:
                continue
            rec = sweep_point(F, K, base, tasks)
            out.append(rec)
            if on_record is not None:
                on_record(rec)
    return out


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_sweep_csv(path, records, comments=()):
    with _writer(path) as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in records:
            w.writerow([_fmt(x) for x in r.row()])


def read_sweep_csv(path) -> list[SweepRecord]:
    out = []
    with open(path, newline="") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    head = rows[0]
    for row in rows[1:]:
        d = dict(zip(head, row))
        out.append(
            SweepRecord(
                float(d["F"]), float(d["K"]), float(d["c"]), float(d["nmse_short"]), int(d["rho_max"]),
                float(d["lambda1"]), float(d["lambda2"]), float(d["lambda3"]),
                bool(int(d["climate"])), bool(int(d["type"])), int(d["seed"]),
                float(d.get("lyap_drift", "nan")),
            )
        )
    return out


def cluster_count(points, gap: float | None = None, min_size: int | None = None) -> int:
    """Number of groups in a 1-D or 2-D point set under single linkage.

    Two points share a group when a chain of neighbours closer than ``gap``
    joins them; ``gap`` defaults to 5% of the largest coordinate range.
    Groups smaller than ``min_size`` (default ``max(3, 2% of the points)``)
    are treated as stragglers and not counted.
    """
    from scipy.cluster.hierarchy import fcluster, linkage

    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if len(P) < 2:
        return len(P)
    if gap is None:
        gap = 0.05 * float(np.max(P.max(axis=0) - P.min(axis=0)))
    if min_size is None:
        min_size = max(3, int(0.02 * len(P)))
    labels = fcluster(linkage(P, "single"), t=gap, criterion="distance")
    return int(np.sum(np.bincount(labels) >= min_size))


__all__ = [
    "ExtremaSeries",
    "local_extrema",
    "return_map",
    "jacobian_dense",
    "jacobian_vector_product",
    "LyapunovSpectrum",
    "lyapunov_spectrum",
    "ode_lyapunov_spectrum",
    "RotationNumbers",
    "rotation_numbers",
    "rotation_from_phases",
    "ClimateVerdict",
    "climate_check",
    "SweepBase",
    "SweepRecord",
    "sweep_point",
    "sweep",
    "write_sweep_csv",
    "read_sweep_csv",
    "cluster_count",
    "LORENZ_EXPONENTS",
]

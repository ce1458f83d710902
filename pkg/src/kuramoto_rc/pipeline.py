"""Wipe-out, ridge training and testing of the oscillator reservoir.

Time layout (reservoir steps of size ``h_theta``)::

    [-T_wipe, 0)       wipe-out, input-driven, states discarded
    [0, T_train)       input-driven, states collected for regression
    [T_train, +T_test) autonomous (closed loop) or driven (open loop) testing

Input index ``i`` of the sampler is reservoir step ``i`` counted from
``-T_wipe``.  Scoring uses ``t_i = T_train + (i - 1) h``, ``i = 1..n_test``;
the first scored prediction is the readout of the final training state.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _backend
from .dynamics import InteractionSpec, ReservoirConfig, initial_phases, stream
from .errors import InvalidArgument, NumericalError
from .integrators import InputSampler, StepSchedule
from .readout import ReadoutSpec, ReadoutWeights, readout_features
from .tasks import SignalSeries

CLOSED_LOOP = {"rk4_full": 0, "rk4_rk1": 1}


@dataclass(frozen=True)
class TrainedReservoir:
    cfg: ReservoirConfig
    weights: ReadoutWeights
    schedule: StepSchedule
    final_train_state: np.ndarray
    closed_loop_mode: str = "rk4_full"


@dataclass
class ExperimentResult:
    trained: TrainedReservoir
    prediction: SignalSeries
    truth: SignalSeries
    nmse: float
    r: np.ndarray
    train_nmse: np.ndarray
    final_state: np.ndarray
    extras: dict = field(default_factory=dict)


def _gram_solve(G, B, epsilon, overwrite=False):
    """Solve ``W (G + eps I) = B`` reading only the upper triangle of ``G``.

    Cholesky first.  When rounding makes ``G + eps I`` numerically indefinite
    (``eps`` far below ``eps_machine * |G|``) and ``eps > 0``, fall back to the
    eigendecomposition of ``G`` with its eigenvalues clipped at 0, which is
    the same ridge solution computed stably.  With ``eps = 0`` a failed
    factorization is an error.  ``overwrite=True`` lets the factorization
    reuse ``G``'s memory (it must be Fortran-ordered).
    """
    n = G.shape[0]
    A = G if overwrite else np.array(G, order="F")
    # keep a copy of the upper triangle in the (unused) lower one: a failed
    # factorization leaves the upper triangle partly overwritten
    diag = np.diag(A).copy()
    for j in range(n - 1):
        A[j + 1 :, j] = A[j, j + 1 :]
    A[np.diag_indices(n)] += epsilon
    try:
        factor = scipy.linalg.cho_factor(A, lower=False, overwrite_a=True, check_finite=False)
        if not np.all(np.isfinite(np.diag(factor[0]))):
            raise np.linalg.LinAlgError("non-finite factor")
    except np.linalg.LinAlgError:
        for j in range(n - 1):
            A[j, j + 1 :] = A[j + 1 :, j]
        A[np.diag_indices(n)] = diag
        ev, V = scipy.linalg.eigh(A, lower=False, overwrite_a=True, check_finite=False)
        lo, hi = ev[0] + epsilon, ev[-1] + epsilon
        cond = hi / lo if lo > 0 else np.inf
        if not epsilon > 0:
            raise NumericalError(
                f"ridge Gram matrix is not positive definite (condition estimate {cond:.3e})"
            ) from None
        return ((B @ V) / (np.maximum(ev, 0.0) + epsilon)) @ V.T
    return scipy.linalg.cho_solve(factor, B.T, check_finite=False).T


class _Gram:
    """Streaming ``sum phi phi^T`` (upper triangle, BLAS ``syrk``), ``sum u phi^T`` and ``sum u^2``."""

    def __init__(self, n_features, n_out):
        self.G = np.zeros((n_features, n_features), order="F")
        self.B = np.zeros((n_out, n_features))
        self.usq = np.zeros(n_out)

    def add(self, Phi, Y):
        self.G = scipy.linalg.blas.dsyrk(1.0, Phi, beta=1.0, c=self.G, trans=1, lower=0, overwrite_c=1)
        self.B += Y.T @ Phi
        self.usq += np.sum(Y * Y, axis=0)

    def solve(self, epsilon):
        """Weights and the training-window NMSE per output.

        Uses ``W G W^T = (B - eps W) W^T``, so ``G`` may be consumed by the
        factorization.
        """
        W = _gram_solve(self.G, self.B, epsilon, overwrite=True)
        self.G = None
        fit = self.usq - np.sum(W * self.B, axis=1) - epsilon * np.sum(W * W, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return W, fit / self.usq


def ridge_solve(features, targets, epsilon: float, spec: ReadoutSpec = ReadoutSpec()) -> ReadoutWeights:
    """``W' = U Phi^T (Phi Phi^T + eps I)^{-1}`` via a Cholesky solve.

    ``features`` is ``N_ro x T`` and ``targets`` ``M x T``.
    """
    Phi = np.asarray(features, dtype=np.float64)
    U = np.asarray(targets, dtype=np.float64)
    if U.ndim == 1:
        U = U[None, :]
    if Phi.ndim != 2 or Phi.shape[1] != U.shape[1] or Phi.shape[1] < 1:
        raise InvalidArgument("features and targets must share T >= 1 columns")
    if epsilon < 0:
        raise InvalidArgument("epsilon must be >= 0")
    W = _gram_solve(np.asfortranarray(Phi @ Phi.T), U @ Phi.T, epsilon, overwrite=True)
    return ReadoutWeights(W, spec, float(epsilon))


def nmse(pred, truth) -> float:
    """Component-averaged ``sum |u - u_hat|^2 / sum |u|^2``."""
    p = pred.values if isinstance(pred, SignalSeries) else np.asarray(pred, dtype=np.float64)
    u = truth.values if isinstance(truth, SignalSeries) else np.asarray(truth, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    if u.ndim == 1:
        u = u[:, None]
    if p.shape != u.shape:
        raise InvalidArgument(f"prediction {p.shape} and truth {u.shape} are not aligned")
    energy = np.sum(u * u, axis=0)
    if np.any(energy == 0):
        raise InvalidArgument("truth has a zero-energy component")
    return float(np.mean(np.sum((u - p) ** 2, axis=0) / energy))


def make_sampler(series: SignalSeries, schedule: StepSchedule, mode: str = "auto") -> InputSampler:
    """Map an input series onto the reservoir clock.

    A series sampled at ``h_u / 2`` is used as the half-step grid directly; a
    series sampled at ``h_u`` gets its midpoints by ``hold`` (default) or
    ``linear`` interpolation.
    """
    h_u = schedule.h_u
    t0 = -schedule.T_wipe
    if mode == "auto":
        if np.isclose(series.h, h_u / 2, rtol=1e-9):
            return InputSampler.from_half_grid(series.values, schedule.h_theta, t0)
        mode = "hold"
    if not np.isclose(series.h, h_u, rtol=1e-9):
        raise InvalidArgument(f"series step {series.h} matches neither h_u = {h_u} nor h_u / 2")
    return InputSampler.from_samples(series.values, schedule.h_theta, t0, mode)


def run_experiment(
    cfg: ReservoirConfig,
    spec: ReadoutSpec,
    schedule: StepSchedule,
    inputs,
    epsilon: float,
    closed_loop_mode: str = "rk4_full",
    *,
    target=None,
    driven_scheme: str = "rk4",
    initial: str = "ramp",
    theta0=None,
    chunk: int = 2000,
    backend: str | None = None,
) -> ExperimentResult:
    """Wipe out, train the readout and test.

    ``inputs`` is an :class:`InputSampler` or a :class:`SignalSeries` (mapped
    with :func:`make_sampler`).  Without ``target`` the readout learns the
    input itself and testing runs the autonomous network.  With ``target`` (a
    ``T x M_out`` array indexed like the input samples) the readout learns the
    target and testing keeps driving the network with the input.
    """
    if closed_loop_mode not in CLOSED_LOOP:
        raise InvalidArgument(f"unknown closed-loop mode {closed_loop_mode!r}")
    scheme = {"rk4": 0, "rk1": 1}.get(driven_scheme)
    if scheme is None:
        raise InvalidArgument(f"unknown driven scheme {driven_scheme!r}")
    sampler = inputs if isinstance(inputs, InputSampler) else make_sampler(inputs, schedule)
    if sampler.M != cfg.M:
        raise InvalidArgument(f"input has M={sampler.M}, config has M={cfg.M}")
    kern = _backend.kernels(backend)
    N, h = cfg.N, schedule.h_theta
    nw, nt, ns = schedule.n_wipe, schedule.n_train, schedule.n_test
    if target is not None:
        target = np.asarray(target, dtype=np.float64)
        if target.ndim == 1:
            target = target[:, None]
        if target.shape[0] < nw + nt + ns:
            raise InvalidArgument("target series is too short")
    sampler.window(0, nw + nt + (ns if target is not None else 0))

    if theta0 is None:
        seed = 0 if cfg.seed is None else cfg.seed
        ss = np.random.SeedSequence([int(seed), 4])
        theta0 = initial_phases(N, initial, int(ss.generate_state(1)[0]))
    net = cfg.net
    no_states = np.empty((0, N))
    theta = kern.driven_trajectory(np.array(theta0, dtype=np.float64), net, sampler.window(0, nw), h, nw, scheme, no_states)

    n_ro = spec.n_features(N)
    M_out = cfg.M if target is None else target.shape[1]
    gram = _Gram(n_ro, M_out)
    done = 0
    while done < nt:
        n = min(chunk, nt - done)
        start = nw + done
        states = np.empty((n, N))
        theta = kern.driven_trajectory(theta, net, sampler.window(start, n), h, n, scheme, states)
        Phi = readout_features(states, spec)
        Y = sampler.grid[2 * start : 2 * (start + n) : 2] if target is None else target[start : start + n]
        gram.add(Phi, Y)
        done += n
    W, train_nmse = gram.solve(epsilon)
    weights = ReadoutWeights(W, spec, float(epsilon))

    trained = TrainedReservoir(cfg, weights, schedule, theta.copy(), closed_loop_mode)
    start = nw + nt
    if target is None:
        pred = np.empty((ns, cfg.M))
        r = np.empty(ns)
        final = kern.closed_trajectory(
            theta, net, weights.W, spec.code, h, ns, CLOSED_LOOP[closed_loop_mode], pred, r
        )
        truth = sampler.grid[2 * start : 2 * (start + ns) : 2]
    else:
        states = np.empty((ns, N))
        final = kern.driven_trajectory(theta, net, sampler.window(start, ns), h, ns, scheme, states)
        pred = readout_features(states, spec) @ W.T
        r = np.abs(np.exp(1j * states).mean(axis=1))
        truth = target[start : start + ns]
    if not np.all(np.isfinite(pred)):
        raise NumericalError("prediction became non-finite")
    t0 = schedule.T_train
    pred_s = SignalSeries(t0, h, pred)
    truth_s = SignalSeries(t0, h, truth)
    return ExperimentResult(trained, pred_s, truth_s, nmse(pred_s, truth_s), r, train_nmse, final)


def continue_closed_loop(trained: TrainedReservoir, n_steps: int, theta=None, backend: str | None = None):
    """Run the autonomous network ``n_steps`` from ``theta`` (default: end of
    training).  Returns ``(predictions, r_series, final_state)``."""
    cfg, w = trained.cfg, trained.weights
    theta = trained.final_train_state if theta is None else np.asarray(theta, dtype=np.float64)
    pred = np.empty((n_steps, cfg.M))
    r = np.empty(n_steps)
    final = _backend.kernels(backend).closed_trajectory(
        theta, cfg.net, w.W, w.spec.code, trained.schedule.h_theta, n_steps,
        CLOSED_LOOP[trained.closed_loop_mode], pred, r,
    )
    return pred, r, final


# --- persistence ----------------------------------------------------------------


def _writer(target):
    """Open ``target`` for writing unless it already is a text stream."""
    return nullcontext(target) if hasattr(target, "write") else open(target, "w", newline="")


def save_weights(path, weights: ReadoutWeights, seed: int | None = None, comments=()) -> None:
    """Text format: ``key = value`` header then one row of ``%.17g`` values per line."""
    with _writer(path) as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(f"M = {weights.M}\n")
        fh.write(f"N_ro = {weights.n_features}\n")
        fh.write(f"variant = {weights.spec.variant}\n")
        fh.write(f"epsilon = {weights.epsilon!r}\n")
        fh.write(f"seed = {'' if seed is None else int(seed)}\n")
        for row in weights.W:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_weights(path) -> tuple[ReadoutWeights, int | None]:
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" in line:
                k, v = (s.strip() for s in line.split("=", 1))
                header[k] = v
            else:
                rows.append([float(x) for x in line.split()])
    W = np.array(rows)
    if W.shape != (int(header["M"]), int(header["N_ro"])):
        raise InvalidArgument("weights file header does not match its body")
    seed = int(header["seed"]) if header.get("seed") else None
    return ReadoutWeights(W, ReadoutSpec(header["variant"]), float(header["epsilon"])), seed


# --- random-search benchmarks -------------------------------------------------------

DEFAULT_RANGES = {"c": (0.5, 1.5), "F": (5.0, 60.0), "K": (0.0, 40.0)}


def sample_parameters(n_samples: int, ranges: dict, seed: int) -> np.ndarray:
    """``n_samples x 3`` uniform draws of ``(c, F, K)``."""
    rng = stream(seed, "readout_bench")
    lo = np.array([ranges[k][0] for k in ("c", "F", "K")])
    hi = np.array([ranges[k][1] for k in ("c", "F", "K")])
    return lo + (hi - lo) * rng.random((n_samples, 3))


def _bench_point(args):
    (c, F, K), seed, N, variant, interaction, series, schedule, epsilon = args
    from .connectivity import erdos_renyi, regular_graph, watts_strogatz

    if interaction[0] == "all_to_all":
        inter = InteractionSpec()
    else:
        kind, params, norm = interaction
        gseed = int(np.random.SeedSequence([seed, 3]).generate_state(1)[0])
        make = {"erdos_renyi": erdos_renyi, "regular": regular_graph, "watts_strogatz": watts_strogatz}[kind]
        inter = InteractionSpec("graph", adjacency=make(N, *params, seed=gseed), normalization=norm)
    cfg = ReservoirConfig.build(N, series.M, K, F, c, seed=seed, interaction=inter)
    try:
        return run_experiment(cfg, ReadoutSpec(variant), schedule, series, epsilon).nmse
    except (NumericalError, FloatingPointError):
        return float("inf")


def random_search(
    series: SignalSeries,
    schedule: StepSchedule,
    params: np.ndarray,
    *,
    N: int = 1000,
    variant: str = "v3",
    interaction=("all_to_all",),
    epsilon: float = 1e-5,
    seed: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """NMSE for each ``(c, F, K)`` row; reservoir seeds are ``seed + row``."""
    jobs = [
        (tuple(p), seed + i, N, variant, tuple(interaction), series, schedule, epsilon)
        for i, p in enumerate(params)
    ]
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            return np.array(list(pool.map(_bench_point, jobs)))
    return np.array([_bench_point(j) for j in jobs])


def readout_benchmark(
    n_samples: int,
    series: SignalSeries,
    schedule: StepSchedule,
    ranges: dict | None = None,
    seed: int = 0,
    variants=("v1", "v2", "v3"),
    threshold: float = 1e-2,
    threads: int = 1,
    **kw,
) -> dict:
    """Success rate (NMSE below ``threshold``) of each readout variant over the
    same uniform ``(c, F, K)`` samples."""
    if n_samples < 1:
        raise InvalidArgument("n_samples must be positive")
    params = sample_parameters(n_samples, ranges or DEFAULT_RANGES, seed)
    out = {}
    for variant in variants:
        errs = random_search(series, schedule, params, variant=variant, seed=seed, threads=threads, **kw)
        out[variant] = {"rate": float(np.mean(errs < threshold)), "nmse": errs}
    out["params"] = params
    return out

"""Command-line runner: ``run``, ``sweep``, ``scaling`` and ``analyze``.

Configs are INI files (``configparser``), one flat section per module::

    [experiment]  task, seed, tag
    [reservoir]   N, K, F, c, freq, freq_mu, freq_sigma, interaction, ...
    [readout]     variant, epsilon
    [schedule]    h_theta, h_u, n_wipe, n_train, n_test, closed_loop, driven_scheme
    [task]        task-specific generator settings
    [sweep]       F, K (comma lists), tasks, score_time, rotation_steps, lyapunov_horizon
    [analysis]    steps, lyapunov_horizon, k, bound
    [scaling]     N (comma list), steps, repeats, reference

Exit codes: 0 success, 2 usage or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .analysis import (
    SweepBase,
    SweepRecord,
    local_extrema,
    lyapunov_spectrum,
    read_sweep_csv,
    return_map,
    rotation_numbers,
    sweep_point,
    write_sweep_csv,
)
from .connectivity import erdos_renyi, regular_graph, watts_strogatz
from .dynamics import InteractionSpec, ReservoirConfig
from .errors import InvalidArgument, NumericalError
from .integrators import StepSchedule
from .pipeline import TrainedReservoir, continue_closed_loop, load_weights, run_experiment, save_weights
from .readout import ReadoutSpec
from .tasks import (
    KSParams,
    LORENZ_SCALE,
    LorenzParams,
    MackeyGlassParams,
    RosslerParams,
    SignalSeries,
    ks_series,
    lorenz_series,
    mackey_glass_series,
    narma10_series,
    rossler_series,
)

log = logging.getLogger("kuramoto_rc")

TASKS = ("lorenz", "rossler", "mackey_glass", "ks", "narma10")
ANALYSES = ("return_map", "lyapunov", "rotation")
REQUIRED = {
    "experiment": ("task",),
    "reservoir": ("N", "K", "F", "c"),
    "readout": ("epsilon",),
    "schedule": ("h_theta", "n_wipe", "n_train", "n_test"),
}


class ConfigError(Exception):
    pass


# --- config -----------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    text: str
    parser: configparser.ConfigParser
    seed: int
    out: Path

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    @property
    def task(self) -> str:
        return self.get("experiment", "task")

    def get(self, section, key, fallback=None):
        if not self.parser.has_option(section, key):
            if fallback is None:
                raise ConfigError(f"missing required key [{section}] {key}")
            return fallback
        return self.parser.get(section, key)

    def num(self, section, key, fallback=None, kind=float):
        raw = self.get(section, key, None if fallback is None else str(fallback))
        try:
            return kind(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None

    def floats(self, section, key):
        raw = self.get(section, key)
        try:
            return [float(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a list of numbers") from None

    def header(self) -> list[str]:
        return [f"kuramoto_rc {__version__}", f"seed = {self.seed}", f"config_sha256 = {self.sha256}"]


def load_config(path, seed_override=None, out=None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    for section, keys in REQUIRED.items():
        for key in keys:
            if not parser.has_option(section, key):
                raise ConfigError(f"missing required key [{section}] {key}")
    cfg = ExperimentConfig(text, parser, 0, Path(out or "."))
    cfg.seed = int(seed_override) if seed_override is not None else cfg.num("experiment", "seed", 0, int)
    if cfg.task not in TASKS:
        raise ConfigError(f"unknown task {cfg.task!r}; choose from {', '.join(TASKS)}")
    return cfg


def _schedule(cfg: ExperimentConfig) -> StepSchedule:
    h = cfg.num("schedule", "h_theta")
    return StepSchedule.from_counts(
        h,
        cfg.num("schedule", "n_wipe", kind=int),
        cfg.num("schedule", "n_train", kind=int),
        cfg.num("schedule", "n_test", kind=int),
        h_u=cfg.num("schedule", "h_u", h),
    )


def _interaction(cfg: ExperimentConfig, N: int) -> InteractionSpec:
    kind = cfg.get("reservoir", "interaction", "all_to_all")
    if kind != "graph":
        return InteractionSpec(kind, alpha=cfg.num("reservoir", "alpha", 0.0))
    model = cfg.get("reservoir", "graph")
    gseed = int(np.random.SeedSequence([cfg.seed, 3]).generate_state(1)[0])
    if model == "erdos_renyi":
        adj = erdos_renyi(N, cfg.num("reservoir", "graph_p"), gseed)
    elif model == "regular":
        adj = regular_graph(N, cfg.num("reservoir", "graph_d", kind=int), gseed)
    elif model == "watts_strogatz":
        adj = watts_strogatz(N, cfg.num("reservoir", "graph_m", kind=int), cfg.num("reservoir", "graph_p"), gseed)
    else:
        raise ConfigError(f"unknown graph model {model!r}")
    return InteractionSpec("graph", adjacency=adj, normalization=cfg.get("reservoir", "normalization", "degree"))


def _freq(cfg: ExperimentConfig):
    dist = cfg.get("reservoir", "freq", "normal")
    if dist == "normal":
        params = {"mu": cfg.num("reservoir", "freq_mu", 1.0), "sigma": cfg.num("reservoir", "freq_sigma", 1.0)}
    elif dist == "cauchy":
        params = {"omega0": cfg.num("reservoir", "freq_omega0", 1.0), "delta0": cfg.num("reservoir", "freq_delta0", 1.0)}
    else:
        keys = ("mu1", "sigma1", "mu2", "sigma2", "weight")
        params = {k: cfg.num("reservoir", f"freq_{k}") for k in keys}
    return dist, params


def build_reservoir(cfg: ExperimentConfig, M: int, F=None, K=None) -> ReservoirConfig:
    N = cfg.num("reservoir", "N", kind=int)
    dist, params = _freq(cfg)
    return ReservoirConfig.build(
        N,
        M,
        cfg.num("reservoir", "K") if K is None else K,
        cfg.num("reservoir", "F") if F is None else F,
        cfg.num("reservoir", "c"),
        seed=cfg.seed,
        freq=dist,
        freq_params=params,
        interaction=_interaction(cfg, N),
    )


def build_task(cfg: ExperimentConfig, schedule: StepSchedule):
    """Input series on the half-step grid (or at ``h_u`` for NARMA10) and the
    optional open-loop target."""
    task = cfg.task
    n = schedule.n_total + 1
    half = schedule.h_u / 2
    T = n * schedule.h_u
    if task == "lorenz":
        scale = cfg.num("task", "scale", LORENZ_SCALE)
        return lorenz_series(LorenzParams(), h=half, T=T, transient=cfg.num("task", "transient", 40.0), scale=scale), None
    if task == "rossler":
        scale = cfg.num("task", "scale", 1.0)
        return rossler_series(RosslerParams(), h=half, T=T, transient=cfg.num("task", "transient", 200.0), scale=scale), None
    if task == "mackey_glass":
        s = mackey_glass_series(
            MackeyGlassParams(), h=cfg.num("task", "dt", 0.017), T=T,
            transient=cfg.num("task", "transient", 500.0), h_out=half,
        )
        return s, None
    if task == "ks":
        p = KSParams(
            L=cfg.num("task", "L", 45.0), n_grid=cfg.num("task", "n_grid", 128, int),
            M=cfg.num("task", "M", 50, int), dt=cfg.num("task", "dt", 0.05),
        )
        return ks_series(p, h_out=half, T=T, transient=cfg.num("task", "transient", 200.0)), None
    tseed = int(np.random.SeedSequence([cfg.seed, 5]).generate_state(1)[0])
    u, y = narma10_series(tseed, n)
    return SignalSeries(0.0, schedule.h_u, u[:, None]), y


# --- output helpers -------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_table(path: Path, header_lines, columns, rows) -> None:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([x if isinstance(x, str) else _fmt(x) for x in row])
    atomic_write(path, buf.getvalue())


def read_table(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


# --- subcommands -------------------------------------------------------------------


def cmd_run(cfg: ExperimentConfig) -> dict:
    schedule = _schedule(cfg)
    series, target = build_task(cfg, schedule)
    M = series.M
    res_cfg = build_reservoir(cfg, M)
    spec = ReadoutSpec(cfg.get("readout", "variant", "v3"))
    eps = cfg.num("readout", "epsilon")
    res = run_experiment(
        res_cfg, spec, schedule, series, eps,
        cfg.get("schedule", "closed_loop", "rk4_full"),
        target=target,
        driven_scheme=cfg.get("schedule", "driven_scheme", "rk1" if cfg.task == "narma10" else "rk4"),
    )
    out, head = cfg.out, cfg.header()
    t = res.prediction.times
    Mo = res.truth.values.shape[1]
    cols = ["t"] + [f"u{j + 1}" for j in range(Mo)] + [f"uhat{j + 1}" for j in range(Mo)]
    write_table(out / "prediction.csv", head, cols, (np.concatenate([[ti], a, b]) for ti, a, b in zip(t, res.truth.values, res.prediction.values)))
    write_table(out / "r.csv", head, ["t", "r"], zip(t, res.r))
    write_table(out / "final_train_state.csv", head, ["k", "theta"], ((str(k), th) for k, th in enumerate(res.trained.final_train_state)))
    buf = io.StringIO()
    save_weights(buf, res.trained.weights, cfg.seed, head)
    atomic_write(out / "weights.txt", buf.getvalue())
    atomic_write(out / "config.ini", cfg.text)
    summary = {
        "task": cfg.task,
        "nmse": res.nmse,
        "train_nmse": float(np.mean(res.train_nmse)),
        "N": res_cfg.N,
        "M": Mo,
        "n_test": schedule.n_test,
        "seed": cfg.seed,
    }
    write_table(out / "summary.csv", head, ["key", "value"], ((k, v if isinstance(v, str) else _fmt(v)) for k, v in summary.items()))
    log.info("NMSE %.6g (train %.3g)", res.nmse, summary["train_nmse"])
    return summary


def _point_path(out: Path, F: float, K: float) -> Path:
    return out / "points" / f"F{F!r}_K{K!r}.csv"


def cmd_sweep(cfg: ExperimentConfig, resume: bool = False, threads: int = 1) -> list[SweepRecord]:
    schedule = _schedule(cfg)
    series, target = build_task(cfg, schedule)
    if target is not None:
        raise ConfigError("sweeps need a closed-loop task")
    dist, params = _freq(cfg)
    tasks = tuple(x.strip() for x in cfg.get("sweep", "tasks", "nmse_short,rotation,lyapunov").split(","))
    rot = cfg.get("sweep", "rotation_steps", "")
    lh = cfg.get("sweep", "lyapunov_horizon", "")
    base = SweepBase(
        N=cfg.num("reservoir", "N", kind=int), c=cfg.num("reservoir", "c"), series=series, schedule=schedule,
        epsilon=cfg.num("readout", "epsilon"), variant=cfg.get("readout", "variant", "v3"), seed=cfg.seed,
        freq=dist, freq_params=params, score_time=cfg.num("sweep", "score_time", 2.0),
        rotation_steps=int(rot) if rot else None, lyapunov_horizon=float(lh) if lh else None,
        climate_epsilon=cfg.num("sweep", "climate_epsilon", 0.02),
    )
    grid = [(F, K) for F in cfg.floats("sweep", "F") for K in cfg.floats("sweep", "K")]
    out, head = cfg.out, cfg.header()
    todo = [p for p in grid if not (resume and _point_path(out, *p).exists())]
    log.info("sweep: %d points, %d to compute", len(grid), len(todo))

    def store(rec):
        if rec.error:
            log.warning("point F=%s K=%s failed: %s", rec.F, rec.K, rec.error)
        buf = io.StringIO()
        write_sweep_csv(buf, [rec], head)
        atomic_write(_point_path(out, rec.F, rec.K), buf.getvalue())

    if threads > 1 and todo:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(threads) as pool:
            for rec in pool.map(sweep_point, *zip(*todo), [base] * len(todo), [tasks] * len(todo)):
                store(rec)
    else:
        for F, K in todo:
            store(sweep_point(F, K, base, tasks))
    records = [read_sweep_csv(_point_path(out, F, K))[0] for F, K in grid]
    buf = io.StringIO()
    write_sweep_csv(buf, records, head)
    atomic_write(out / "sweep.csv", buf.getvalue())
    return records


def scaling_benchmark(N_values, steps: int = 200, repeats: int = 3, reference: bool = True, seed: int = 0):
    """Seconds per autonomous (closed-loop) RK4 step for each ``N``.

    Returns rows ``(N, mode, seconds)`` with mode ``mean_field`` and, when
    ``reference`` is set, ``pairwise`` (the O(N^2) double sum).
    """
    kern = _backend.kernels()
    modes = ["all_to_all"] + (["pairwise"] if reference else [])
    rows = []
    for mode in modes:
        for N in N_values:
            cfg = ReservoirConfig.build(int(N), 3, 20.68, 37.545, 1.159, seed=seed, interaction=InteractionSpec(mode))
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 9])))
            W = 1e-3 * rng.standard_normal((3, 2 * int(N) + 1))
            theta = 2.0 * np.pi * rng.random(int(N))
            # the quadratic path is slow enough that a tenth of the steps times it well
            n = steps if mode == "all_to_all" else max(10, steps // 10)
            pred, r = np.empty((n, 3)), np.empty(n)
            kern.closed_trajectory(theta, cfg.net, W, 3, 0.01, 2, 0, pred[:2], r[:2])
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                kern.closed_trajectory(theta, cfg.net, W, 3, 0.01, n, 0, pred, r)
                best = min(best, time.perf_counter() - t0)
            rows.append((int(N), "mean_field" if mode == "all_to_all" else "pairwise", best / n))
    return rows


def linear_fit(x, y):
    """Least-squares ``y = a + b x``; returns ``(a, b, R^2)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    b, a = np.polyfit(x, y, 1)
    res = y - (a + b * x)
    ss = np.sum((y - y.mean()) ** 2)
    return float(a), float(b), float(1.0 - np.sum(res**2) / ss) if ss > 0 else 1.0


def cmd_scaling(N_values, steps, repeats, reference, out: Path, head) -> list:
    if list(N_values) != sorted(N_values):
        raise ConfigError("N list must be ascending")
    rows = scaling_benchmark(N_values, steps, repeats, reference)
    write_table(out / "scaling.csv", head, ["N", "mode", "seconds_per_step"], ((str(n), m, s) for n, m, s in rows))
    fits = []
    for mode in ("mean_field", "pairwise"):
        sel = [(n, s) for n, m, s in rows if m == mode]
        if len(sel) >= 2:
            n, s = zip(*sel)
            a, b, r2 = linear_fit(n, s)
            fits.append((mode, a, b, r2, s[-1] / s[0]))
    if fits:
        write_table(out / "scaling_fit.csv", head, ["mode", "intercept", "slope", "r2", "ratio_last_first"],
                    ((m, a, b, r2, q) for m, a, b, r2, q in fits))
    return rows


def load_run(run_dir: Path):
    """Rebuild the trained reservoir of a ``run`` output directory."""
    need = ("config.ini", "weights.txt", "final_train_state.csv")
    for name in need:
        if not (run_dir / name).exists():
            raise ConfigError(f"missing run artifact {run_dir / name}")
    weights, seed = load_weights(run_dir / "weights.txt")
    cfg = load_config(run_dir / "config.ini", seed)
    schedule = _schedule(cfg)
    res_cfg = build_reservoir(cfg, weights.M)
    _, theta = read_table(run_dir / "final_train_state.csv")
    trained = TrainedReservoir(res_cfg, weights, schedule, theta[:, 1].copy(), cfg.get("schedule", "closed_loop", "rk4_full"))
    return cfg, trained


def cmd_analyze(run_dir: Path, analyses, out: Path | None = None) -> dict:
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise ConfigError(f"unknown analysis {unknown[0]!r}; choose from {', '.join(ANALYSES)}")
    cfg, trained = load_run(run_dir)
    out = out or run_dir
    head = cfg.header()
    h = trained.schedule.h_theta
    done = {}
    if "return_map" in analyses:
        steps = cfg.num("analysis", "steps", 2 * trained.schedule.n_train, int)
        _, r, _ = continue_closed_loop(trained, steps)
        ex = local_extrema(r, "min", cfg.num("analysis", "bound", 1e-3), h=h, t0=trained.schedule.T_train)
        pairs = return_map(ex)
        write_table(out / "return_map.csv", head, ["r_n", "r_n1"], pairs)
        done["return_map"] = pairs
    if "lyapunov" in analyses:
        lh = cfg.get("analysis", "lyapunov_horizon", "")
        spec = lyapunov_spectrum(trained, cfg.num("analysis", "k", 3, int), float(lh) if lh else None)
        write_table(out / "lyapunov.csv", head + [f"horizon = {spec.horizon!r}", f"drift = {spec.drift!r}"],
                    ["k", "lambda"], ((str(i + 1), x) for i, x in enumerate(spec.exponents)))
        done["lyapunov"] = spec
    if "rotation" in analyses:
        steps = cfg.get("analysis", "rotation_steps", "")
        rot = rotation_numbers(trained, int(steps) if steps else None)
        write_table(out / "rotation.csv", head + [f"horizon_steps = {rot.horizon_steps}"], ["k", "rho"],
                    ((str(k), str(int(x))) for k, x in enumerate(rot.counts)))
        done["rotation"] = rot
    return done


# --- entry point ---------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kuramoto-rc", description="Kuramoto oscillator reservoir computing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="INI experiment config")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")

    common(sub.add_parser("run", parents=[verbose], help="wipe-out, train, test; write prediction and weights"))
    sp = sub.add_parser("sweep", parents=[verbose], help="(F, K) grid of NMSE, rotation numbers and Lyapunov exponents")
    common(sp)
    sp.add_argument("--resume", action="store_true", help="skip grid points already on disk")
    sp = sub.add_parser("scaling", parents=[verbose], help="closed-loop step time against N")
    common(sp, config=False)
    sp.add_argument("--config", help="optional INI with a [scaling] section")
    sp.add_argument("--N", default="500,1000,2000,4000", help="comma list of sizes (ascending)")
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--no-reference", action="store_true", help="skip the O(N^2) pairwise path")
    sp = sub.add_parser("analyze", parents=[verbose], help="return map, Lyapunov spectrum, rotation numbers of a run")
    sp.add_argument("run_dir", help="output directory of a previous run")
    sp.add_argument("--analyses", default="return_map,lyapunov,rotation")
    sp.add_argument("--out", help="output directory (default: run_dir)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    p = _parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config, args.seed, args.out)
            s = cmd_run(cfg)
            print(f"NMSE = {s['nmse']!r}")
        elif args.command == "sweep":
            cfg = load_config(args.config, args.seed, args.out)
            recs = cmd_sweep(cfg, args.resume, args.threads)
            print(f"{len(recs)} grid points written to {Path(args.out) / 'sweep.csv'}")
        elif args.command == "scaling":
            try:
                Ns = [int(x) for x in args.N.split(",")]
            except ValueError:
                raise ConfigError("--N must be a comma list of integers") from None
            steps, repeats, ref = args.steps, args.repeats, not args.no_reference
            head = [f"kuramoto_rc {__version__}", f"backend = {_backend.BACKEND}"]
            if args.config:
                c = load_scaling_config(args.config)
                Ns = c.get("N", Ns)
                steps = c.get("steps", steps)
                repeats = c.get("repeats", repeats)
                ref = c.get("reference", ref)
            rows = cmd_scaling(Ns, steps, repeats, ref, Path(args.out), head)
            for n, m, s in rows:
                print(f"{m:10s} N={n:6d} {s * 1e3:.4f} ms/step")
        else:
            done = cmd_analyze(Path(args.run_dir), [a.strip() for a in args.analyses.split(",") if a.strip()],
                               Path(args.out) if args.out else None)
            print("wrote " + ", ".join(done))
    except (ConfigError, InvalidArgument) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def load_scaling_config(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(Path(path).read_text())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read scaling config: {exc}") from None
    if not parser.has_section("scaling"):
        return {}
    s = parser["scaling"]
    out = {}
    try:
        if "N" in s:
            out["N"] = [int(x) for x in s["N"].replace(",", " ").split()]
        if "steps" in s:
            out["steps"] = s.getint("steps")
        if "repeats" in s:
            out["repeats"] = s.getint("repeats")
        if "reference" in s:
            out["reference"] = s.getboolean("reference")
    except ValueError as exc:
        raise ConfigError(f"[scaling] {exc}") from None
    return out


if __name__ == "__main__":
    sys.exit(main())

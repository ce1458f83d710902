"""Time the numba kernels against the pure-numpy fallback.

Both backends are imported side by side (the environment flag only picks the
default), so a single process measures both.  Run with

    python3 benchmarks/bench_backends.py [--N 200 1000 4000] [--steps 500]
"""

import argparse
import timeit

import numpy as np

from kuramoto_rc import _backend
from kuramoto_rc.dynamics import InteractionSpec, ReservoirConfig


def setup(N, kind="all_to_all", seed=0):
    cfg = ReservoirConfig.build(N, 3, 20.68, 37.545, 1.159, seed=seed, interaction=InteractionSpec(kind))
    rng = np.random.default_rng(seed)
    W = 1e-3 * rng.standard_normal((3, 2 * N + 1))
    theta = 2 * np.pi * rng.random(N)
    U = 0.1 * rng.standard_normal((1001, 3))
    return cfg, W, theta, U


def time_backend(name, N, steps, kind):
    kern = _backend.kernels(name)
    cfg, W, theta, U = setup(N, kind)
    pred, r = np.empty((steps, 3)), np.empty(steps)
    states = np.empty((min(steps, 500), N))
    n_drv = states.shape[0]
    # warm-up (triggers compilation for numba)
    kern.closed_trajectory(theta, cfg.net, W, 3, 0.01, 2, 0, pred[:2], r[:2])
    kern.driven_trajectory(theta, cfg.net, U[:5], 0.01, 2, 0, states[:2])

    closed = min(timeit.repeat(lambda: kern.closed_trajectory(theta, cfg.net, W, 3, 0.01, steps, 0, pred, r),
                               number=1, repeat=3)) / steps
    driven = min(timeit.repeat(lambda: kern.driven_trajectory(theta, cfg.net, U[: 2 * n_drv + 1], 0.01, n_drv, 0, states),
                               number=1, repeat=3)) / n_drv
    return closed, driven


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[200, 1000, 4000])
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--kind", default="all_to_all", choices=["all_to_all", "sakaguchi", "pairwise"])
    args = ap.parse_args()

    names = ["numpy"] + (["numba"] if _backend.HAVE_NUMBA else [])
    print(f"{'N':>6} {'backend':>7} {'closed us/step':>15} {'driven us/step':>15}")
    for N in args.N:
        res = {}
        for name in names:
            res[name] = time_backend(name, N, args.steps, args.kind)
            c, d = res[name]
            print(f"{N:6d} {name:>7} {c * 1e6:15.1f} {d * 1e6:15.1f}")
        if len(res) == 2:
            print(f"{'':6} {'speedup':>7} {res['numpy'][0] / res['numba'][0]:15.1f} {res['numpy'][1] / res['numba'][1]:15.1f}")


if __name__ == "__main__":
    main()

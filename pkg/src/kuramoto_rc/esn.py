"""Discrete tanh echo-state network, used as the NARMA10 reference."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgument, NumericalError
from .pipeline import nmse, ridge_solve
from .readout import ReadoutSpec

# declared grid (the reference grid of the original study is not published)
RHO_GRID = tuple(np.round(np.arange(0.6, 1.2001, 0.1), 10))
SIGMA_GRID = (0.1, 0.25, 0.5, 1.0)
EPS_GRID = tuple(10.0**e for e in range(-11, -4))


@dataclass(frozen=True)
class EsnConfig:
    N: int
    spectral_radius: float
    input_scale: float
    seed: int = 0
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.N < 1 or not self.spectral_radius > 0 or self.input_scale < 0:
            raise InvalidArgument("need N >= 1, spectral_radius > 0, input_scale >= 0")

    @cached_property
    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        """``(W, w_in)``: ``W`` uniform on [-1, 1] rescaled to the spectral radius."""
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(self.seed), 8])))
        W = rng.uniform(-1.0, 1.0, (self.N, self.N))
        lam = np.max(np.abs(np.linalg.eigvals(W)))
        if lam == 0:
            raise NumericalError("reservoir matrix has zero spectral radius")
        w_in = rng.uniform(-self.input_scale, self.input_scale, self.N)
        return W * (self.spectral_radius / lam), w_in


def esn_step(state, cfg: EsnConfig | tuple, u_k: float) -> np.ndarray:
    """``x^k = tanh(W x^{k-1} + w_in u^k)``; ``cfg`` may also be a ``(W, w_in)`` pair."""
    W, w_in = cfg.weights if isinstance(cfg, EsnConfig) else cfg
    return np.tanh(W @ np.asarray(state, dtype=np.float64) + w_in * u_k)


def esn_states(cfg: EsnConfig, u) -> np.ndarray:
    """States ``x^k`` for every input sample, starting from ``x = 0``."""
    W, w_in = cfg.weights
    u = np.asarray(u, dtype=np.float64)
    X = np.empty((u.size, cfg.N))
    x = np.zeros(cfg.N)
    for k in range(u.size):
        x = np.tanh(W @ x + w_in * u[k])
        X[k] = x
    return X


def esn_narma10(cfg: EsnConfig, series, n_train: int, n_test: int, n_wipe: int = 200) -> float:
    """Test NMSE of a ridge readout ``y_hat^k = w0 + w . x^k``.

    ``series`` is the pair ``(u, y)``; samples ``[n_wipe, n_wipe + n_train)``
    train and the next ``n_test`` samples score.  ``x^k`` has seen ``u^k`` and
    is matched with ``y^{k+1}``, the first target it can inform.
    """
    u, y = (np.asarray(a, dtype=np.float64) for a in series)
    if len(u) < n_wipe + n_train + n_test + 1:
        raise InvalidArgument("series too short for the requested windows")
    X = esn_states(cfg, u)
    Phi = np.column_stack([np.ones(len(X)), X])
    tr = slice(n_wipe, n_wipe + n_train)
    te = slice(n_wipe + n_train, n_wipe + n_train + n_test)
    w = ridge_solve(Phi[tr].T, y[1:][tr][None, :], cfg.epsilon, ReadoutSpec("v1")).W[0]
    return nmse(Phi[te] @ w, y[1:][te])


def grid_search(N: int, series, n_train: int, n_test: int, n_wipe: int = 200, seed: int = 0,
                rhos=RHO_GRID, sigmas=SIGMA_GRID, epsilons=EPS_GRID):
    """Exhaustive search; returns ``(best_nmse, best_config, all_results)``.

    The ridge constant is chosen on a validation block carved from the end of
    the training window so the test window stays untouched.
    """
    u, y = series
    n_val = max(1, n_train // 5)
    results = []
    for rho, sigma in itertools.product(rhos, sigmas):
        best = None
        for eps in epsilons:
            cfg = EsnConfig(N, float(rho), float(sigma), seed, float(eps))
            try:
                val = esn_narma10(cfg, (u, y), n_train - n_val, n_val, n_wipe)
            except NumericalError:
                continue
            if best is None or val < best[0]:
                best = (val, cfg)
        if best is None:
            continue
        cfg = best[1]
        results.append((esn_narma10(cfg, (u, y), n_train, n_test, n_wipe), best[0], cfg))
    if not results:
        raise NumericalError("every grid point failed")
    results.sort(key=lambda r: r[1])
    return results[0][0], results[0][2], results

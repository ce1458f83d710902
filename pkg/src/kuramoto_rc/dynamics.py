"""Oscillator state, natural frequencies, input assignment and vector fields.

Phases are plain 1-D float64 arrays kept *unwrapped* on the real line; every
consumer goes through sin/cos, so a 2*pi shift never changes a field value
while the accumulated winding stays available for rotation numbers.

Random streams: each stochastic object draws from its own PCG64 generator
seeded with ``SeedSequence([master_seed, offset])`` using the offsets in
:data:`STREAMS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import InvalidArgument
from .readout import ReadoutWeights

STREAMS = {"omega": 1, "assignment": 2, "graph": 3, "phases": 4, "task": 5, "readout_bench": 6}

INTERACTIONS = {"all_to_all": 0, "sakaguchi": 1, "graph": 2, "pairwise": 3}


def stream(master_seed: int, name: str | int) -> np.random.Generator:
    """Independent generator for one stochastic object."""
    offset = STREAMS[name] if isinstance(name, str) else int(name)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), offset])))


class ComplexOrder(NamedTuple):
    r: float
    psi: float


@dataclass(frozen=True)
class NaturalFrequencies:
    omega: np.ndarray
    dist: str
    params: tuple
    seed: int | None = None


def sample_frequencies(dist: str, N: int, seed: int, **params) -> NaturalFrequencies:
    """Draw ``N`` natural frequencies.

    ``normal(mu, sigma)``: ``2*pi*(mu + sigma*Z)``; ``sigma = 0`` is allowed and
    gives every entry exactly ``2*pi*mu``.
    ``cauchy(omega0, delta0)``: inverse-CDF transform ``omega0 + delta0*tan(pi*(U - 1/2))``.
    ``bimodal(mu1, sigma1, mu2, sigma2, weight)``: a two-component version of
    ``normal``; there are no defaults for its parameters.
    """
    if N < 1:
        raise InvalidArgument("N must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    if dist == "normal":
        mu, sigma = float(params.get("mu", 1.0)), float(params.get("sigma", 1.0))
        if sigma < 0:
            raise InvalidArgument("sigma must be >= 0")
        omega = 2.0 * np.pi * (mu + sigma * rng.standard_normal(N))
        key = (mu, sigma)
    elif dist == "cauchy":
        w0, d0 = float(params.get("omega0", 1.0)), float(params.get("delta0", 1.0))
        if not d0 > 0:
            raise InvalidArgument("delta0 must be > 0")
        omega = w0 + d0 * np.tan(np.pi * (rng.random(N) - 0.5))
        key = (w0, d0)
    elif dist == "bimodal":
        try:
            mu1, s1 = float(params["mu1"]), float(params["sigma1"])
            mu2, s2 = float(params["mu2"]), float(params["sigma2"])
            weight = float(params["weight"])
        except KeyError as exc:
            raise InvalidArgument(f"bimodal frequencies need parameter {exc.args[0]!r}") from None
        if s1 < 0 or s2 < 0 or not 0 <= weight <= 1:
            raise InvalidArgument("bimodal needs sigma1, sigma2 >= 0 and weight in [0, 1]")
        first = rng.random(N) < weight
        z = rng.standard_normal(N)
        omega = 2.0 * np.pi * np.where(first, mu1 + s1 * z, mu2 + s2 * z)
        key = (mu1, s1, mu2, s2, weight)
    else:
        raise InvalidArgument(f"unknown frequency distribution {dist!r}")
    return NaturalFrequencies(omega=omega, dist=dist, params=key, seed=int(seed))


def sample_assignment(N: int, M: int, seed: int) -> np.ndarray:
    """0-based input index for each oscillator, uniform on ``{0, ..., M-1}``."""
    if M < 1:
        raise InvalidArgument("M must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    return rng.integers(0, M, size=N).astype(np.int64)


def initial_phases(N: int, mode: str = "ramp", seed: int | None = None) -> np.ndarray:
    """``2*pi*(i-1)/(N-1)`` for ``i = 1..N`` (``mode="ramp"``), or uniform on
    ``[0, 2*pi)`` with ``mode="uniform"``."""
    if N < 1:
        raise InvalidArgument("N must be >= 1")
    if mode == "uniform":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed or 0))))
        return 2.0 * np.pi * rng.random(N)
    if mode != "ramp":
        raise InvalidArgument(f"unknown initial phase mode {mode!r}")
    if N == 1:
        return np.zeros(1)
    return 2.0 * np.pi * np.arange(N) / (N - 1)


@dataclass(frozen=True)
class InteractionSpec:
    """Coupling function.

    ``all_to_all`` and ``sakaguchi`` weigh each pair by ``K/N``; ``sakaguchi``
    adds the phase lag ``alpha``.  ``graph`` sums ``a_jk sin(theta_j - theta_k)``
    over the edges of ``adjacency`` with a uniform edge weight chosen by
    ``normalization``: ``"degree"`` -> ``K / mean_degree``, ``"size"`` ->
    ``K / N``, ``"none"`` -> ``K``.  ``pairwise`` is the all-to-all model
    evaluated by the O(N^2) double sum (reference path for benchmarks).
    """

    kind: str = "all_to_all"
    alpha: float = 0.0
    adjacency: object = None
    normalization: str = "degree"

    def __post_init__(self):
        if self.kind not in INTERACTIONS:
            raise InvalidArgument(f"unknown interaction {self.kind!r}")
        if self.kind == "graph" and self.adjacency is None:
            raise InvalidArgument("graph interaction needs an adjacency")
        if self.normalization not in ("degree", "size", "none"):
            raise InvalidArgument(f"unknown graph normalization {self.normalization!r}")

    def edge_weight(self, K: float, N: int) -> float:
        if self.normalization == "size":
            return K / N
        if self.normalization == "none":
            return K
        d = self.adjacency.mean_degree
        return K / d if d > 0 else 0.0


_EMPTY_I = np.zeros(1, dtype=np.int64)
_EMPTY_F = np.zeros(0)


@dataclass(frozen=True)
class ReservoirConfig:
    """Parameters of the driven oscillator network."""

    N: int
    M: int
    K: float
    F: float
    c: float
    omega: np.ndarray
    v: np.ndarray  # 0-based input index per oscillator
    interaction: InteractionSpec = field(default_factory=InteractionSpec)
    seed: int | None = None

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise InvalidArgument("N and M must be >= 1")
        if not (self.K >= 0 and self.F >= 0 and math.isfinite(self.c)):
            raise InvalidArgument("need K >= 0, F >= 0 and finite c")
        omega = np.ascontiguousarray(self.omega, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.int64)
        if omega.shape != (self.N,) or v.shape != (self.N,):
            raise InvalidArgument("omega and v must have length N")
        if not np.all(np.isfinite(omega)):
            raise InvalidArgument("natural frequencies must be finite")
        if v.size and (v.min() < 0 or v.max() >= self.M):
            raise InvalidArgument("input assignment out of range")
        adj = self.interaction.adjacency
        if adj is not None and adj.N != self.N:
            raise InvalidArgument("adjacency size does not match N")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "v", v)

    @classmethod
    def build(
        cls,
        N: int,
        M: int,
        K: float,
        F: float,
        c: float,
        seed: int = 0,
        freq: str = "normal",
        freq_params: dict | None = None,
        interaction: InteractionSpec | None = None,
    ) -> ReservoirConfig:
        """Sample frequencies and assignment from the streams of ``seed``."""
        ss = np.random.SeedSequence([int(seed), STREAMS["omega"]])
        omega = sample_frequencies(freq, N, int(ss.generate_state(1)[0]), **(freq_params or {})).omega
        ss = np.random.SeedSequence([int(seed), STREAMS["assignment"]])
        v = sample_assignment(N, M, int(ss.generate_state(1)[0]))
        return cls(N, M, K, F, c, omega, v, interaction or InteractionSpec(), seed)

    def replace(self, **changes) -> ReservoirConfig:
        from dataclasses import replace

        return replace(self, **changes)

    @cached_property
    def net(self) -> tuple:
        """Parameter tuple consumed by the kernels."""
        it = self.interaction
        if it.kind == "graph":
            indptr, indices = it.adjacency.csr()
            weights = np.full(indices.size, it.edge_weight(self.K, self.N))
        else:
            indptr, indices, weights = _EMPTY_I, _EMPTY_I[:0], _EMPTY_F
        return (
            self.omega,
            self.v,
            INTERACTIONS[it.kind],
            float(self.K),
            float(it.alpha),
            indptr,
            indices,
            weights,
            float(self.F),
            float(self.c),
        )


def _phases(state) -> np.ndarray:
    theta = np.ascontiguousarray(state, dtype=np.float64)
    if theta.ndim != 1 or theta.size == 0:
        raise InvalidArgument("state must be a nonempty 1-D phase vector")
    return theta


def order_parameter(state) -> ComplexOrder:
    """``r e^{i psi} = mean(e^{i theta})``; ``psi`` in ``[0, 2*pi)``, 0 when ``r = 0``."""
    theta = _phases(state)
    r1, r2 = _backend.kernels().mean_field_sums(theta)
    n = theta.size
    r = math.hypot(r1, r2) / n
    if r == 0.0:
        return ComplexOrder(0.0, 0.0)
    return ComplexOrder(r, math.atan2(r1, r2) % (2.0 * math.pi))


def order_parameter_series(states) -> np.ndarray:
    """Modulus ``r`` for each row of a ``T x N`` state array."""
    states = np.asarray(states, dtype=np.float64)
    return np.abs(np.exp(1j * states).mean(axis=-1))


def coupling_sums(state) -> tuple[float, float]:
    """``(sum sin theta_j, sum cos theta_j)`` in ascending index order."""
    return _backend.kernels().mean_field_sums(_phases(state))


def _check(theta, cfg: ReservoirConfig):
    if theta.size != cfg.N:
        raise InvalidArgument(f"state has {theta.size} phases, config has N={cfg.N}")


def driven_field(state, cfg: ReservoirConfig, u) -> np.ndarray:
    """Input-driven vector field."""
    theta = _phases(state)
    _check(theta, cfg)
    u = np.ascontiguousarray(u, dtype=np.float64).reshape(-1)
    if u.size != cfg.M:
        raise InvalidArgument(f"input has length {u.size}, expected M={cfg.M}")
    return _backend.kernels().driven_field(theta, cfg.net, u)


def autonomous_field(state, cfg: ReservoirConfig, readout: ReadoutWeights) -> np.ndarray:
    """Vector field with the input replaced by the readout feedback."""
    theta = _phases(state)
    _check(theta, cfg)
    readout.check(cfg.N, cfg.M)
    return _backend.kernels().autonomous_field(theta, cfg.net, readout.W, readout.spec.code)


def predict(state, readout: ReadoutWeights) -> np.ndarray:
    """``W' f(theta)``."""
    theta = _phases(state)
    readout.check(theta.size)
    return _backend.kernels().predict(theta, readout.W, readout.spec.code)

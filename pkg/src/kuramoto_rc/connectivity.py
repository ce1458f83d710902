"""Random-graph adjacencies for the sparse-coupling variant."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidArgument


@dataclass(frozen=True)
class Adjacency:
    """Undirected, loop-free graph stored as an ``E x 2`` edge list with ``i < j``.

    ``weights`` are membership weights (all 1 for the generators here); the
    coupling strength is applied by :class:`~kuramoto_rc.dynamics.InteractionSpec`.
    """

    N: int
    edges: np.ndarray
    weights: np.ndarray
    model: str
    params: tuple
    seed: int | None

    @classmethod
    def from_edges(cls, N, edges, model="custom", params=(), seed=None, weights=None):
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        e = np.sort(e, axis=1)
        if e.size and (e[:, 0] == e[:, 1]).any():
            raise InvalidArgument("self-loops are not allowed")
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        w = np.ones(len(e)) if weights is None else np.asarray(weights, dtype=np.float64)[order]
        return cls(int(N), e, w, model, tuple(params), seed)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.N)

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.n_edges / self.N

    @cached_property
    def connected(self) -> bool:
        n_comp, _ = connected_components(self._matrix(), directed=False)
        return n_comp == 1

    def _matrix(self):
        i, j = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        data = np.concatenate([self.weights, self.weights])
        return coo_matrix((data, (rows, cols)), shape=(self.N, self.N)).tocsr()

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` of the symmetric adjacency, columns ascending."""
        m = self._matrix()
        m.sort_indices()
        return m.indptr.astype(np.int64), m.indices.astype(np.int64)

    def to_dense(self) -> np.ndarray:
        return self._matrix().toarray()

    def to_edgelist(self) -> str:
        """One ``"i j weight"`` line per undirected edge."""
        return "".join(f"{i} {j} {w!r}\n" for (i, j), w in zip(self.edges.tolist(), self.weights.tolist()))


def _from_nx(g: nx.Graph, model, params, seed) -> Adjacency:
    edges = np.array(list(g.edges()), dtype=np.int64).reshape(-1, 2)
    return Adjacency.from_edges(g.number_of_nodes(), edges, model, params, seed)


def erdos_renyi(N: int, p: float, seed: int) -> Adjacency:
    """Each unordered pair is an edge independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument("p must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    i, j = np.triu_indices(N, k=1)
    keep = rng.random(i.size) < p
    return Adjacency.from_edges(N, np.column_stack([i[keep], j[keep]]), "erdos_renyi", (p,), seed)


def regular_graph(N: int, d: int, seed: int) -> Adjacency:
    """Uniform-ish random ``d``-regular graph (pairing model, clashes re-drawn)."""
    if d < 0 or d >= N or (N * d) % 2:
        raise InvalidArgument("need 0 <= d < N and N*d even")
    if d == 0:
        return Adjacency.from_edges(N, np.zeros((0, 2)), "regular", (d,), seed)
    g = nx.random_regular_graph(d, N, seed=int(seed))
    return _from_nx(g, "regular", (d,), seed)


def watts_strogatz(N: int, m: int, p: float, seed: int) -> Adjacency:
    """Ring lattice with ``m`` nearest neighbours, each edge rewired with probability ``p``."""
    if m % 2 or m < 0 or m >= N:
        raise InvalidArgument("m must be even with 0 <= m < N")
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument("p must lie in [0, 1]")
    g = nx.watts_strogatz_graph(N, m, p, seed=int(seed))
    return _from_nx(g, "watts_strogatz", (m, p), seed)

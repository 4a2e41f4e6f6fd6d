"""Interaction networks and the game groups built on them.

Two generators are provided: a periodic square lattice with von Neumann
neighborhoods and a Watts-Strogatz small-world graph.  Every node is the
focal point of one game group made of itself and its neighbors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError

LATTICE = "lattice"
SMALL_WORLD = "small_world"


@dataclass(frozen=True)
class GameGroup:
    focal: int
    members: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class NetworkTopology:
    """Immutable simple undirected graph with ascending neighbor lists.

    ``adjacency[i]`` holds the neighbors of node ``i`` in ascending order.
    ``side`` is set for lattices, ``k`` and ``p`` for small-world graphs.
    """

    adjacency: tuple[tuple[int, ...], ...]
    kind: str
    side: Optional[int] = None
    k: Optional[int] = None
    p: Optional[float] = None

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self.adjacency[node]

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    @cached_property
    def degrees(self) -> np.ndarray:
        out = np.array([len(a) for a in self.adjacency], dtype=np.int64)
        out.setflags(write=False)
        return out

    @cached_property
    def group_sizes(self) -> np.ndarray:
        out = self.degrees + 1
        out.setflags(write=False)
        return out

    @cached_property
    def padded_neighbors(self) -> np.ndarray:
        """(N, max_degree) neighbor table; short rows are padded with N.

        Index N is a sentinel: callers append one neutral element to any
        per-node vector before gathering through this table.
        """
        n = self.node_count
        width = int(self.degrees.max()) if n else 0
        table = np.full((n, width), n, dtype=np.int64)
        for i, nbrs in enumerate(self.adjacency):
            table[i, : len(nbrs)] = nbrs
        table.setflags(write=False)
        return table

    @cached_property
    def padding_mask(self) -> np.ndarray:
        """Boolean mask, True where ``padded_neighbors`` holds a real neighbor."""
        mask = self.padded_neighbors < self.node_count
        mask.setflags(write=False)
        return mask

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each edge once as ``(u, v)`` with ``u < v``, ascending."""
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield u, v

    def write_edge_list(self, path) -> None:
        lines = [f"{u},{v}\n" for u, v in self.edges()]
        Path(path).write_text("".join(lines))

    def describe(self) -> str:
        if self.kind == LATTICE:
            return f"lattice(side={self.side})"
        return f"small_world(n={self.node_count}, k={self.k}, p={self.p})"


def _from_neighbor_sets(sets: Sequence[set], kind: str, **meta) -> NetworkTopology:
    adjacency = tuple(tuple(sorted(s)) for s in sets)
    return NetworkTopology(adjacency=adjacency, kind=kind, **meta)


def make_lattice(side: int) -> NetworkTopology:
    """Periodic ``side x side`` square lattice, node id ``x + side * y``.

    On the 2x2 torus the left and right (and up and down) neighbors
    coincide; duplicates are dropped, leaving degree 2.
    """
    if isinstance(side, bool) or not isinstance(side, (int, np.integer)) or side < 2:
        raise InvalidParameterError(f"lattice side must be an integer >= 2, got {side!r}")
    side = int(side)
    sets = []
    for node in range(side * side):
        x, y = node % side, node // side
        sets.append({
            (x + 1) % side + y * side,
            (x - 1) % side + y * side,
            x + ((y + 1) % side) * side,
            x + ((y - 1) % side) * side,
        })
    return _from_neighbor_sets(sets, LATTICE, side=side)


def make_small_world(n: int, k: int, p: float, rng: np.random.Generator) -> NetworkTopology:
    """Watts-Strogatz graph: ring of ``n`` nodes, each joined to ``k`` nearest.

    Layer by layer (offset 1..k/2), each clockwise edge ``(u, u+j)`` is
    rewired with probability ``p`` to a uniformly drawn endpoint that is
    neither ``u`` nor already adjacent to it.  When ``u`` is adjacent to
    every other node the edge is kept.
    """
    if isinstance(k, bool) or int(k) != k or k < 2 or k % 2:
        raise InvalidParameterError(f"k must be an even integer >= 2, got {k!r}")
    if int(n) != n or n <= k:
        raise InvalidParameterError(f"n must be an integer greater than k={k}, got {n!r}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"rewiring probability must lie in [0, 1], got {p!r}")
    n, k = int(n), int(k)
    sets = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            sets[u].add(v)
            sets[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in sets[u] or rng.random() >= p:
                continue
            if len(sets[u]) >= n - 1:
                continue
            while True:
                w = int(rng.integers(n))
                if w != u and w not in sets[u]:
                    break
            sets[u].discard(v)
            sets[v].discard(u)
            sets[u].add(w)
            sets[w].add(u)
    return _from_neighbor_sets(sets, SMALL_WORLD, k=k, p=float(p))


def groups(topology: NetworkTopology) -> list[GameGroup]:
    """One group per node: the focal node first, then its neighbors."""
    return [GameGroup(focal=i, members=(i, *nbrs)) for i, nbrs in enumerate(topology.adjacency)]


def mean_group_size(topology: NetworkTopology) -> float:
    return float(topology.group_sizes.mean())

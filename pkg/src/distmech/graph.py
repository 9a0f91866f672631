"""Directed communication graphs and shortest-path routing.

An edge ``(i, j)`` means agent ``i`` listens to agent ``j``; ``j`` is then an
out-neighbor of ``i``. Vertices are numbered ``0 .. N-1``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import NotStronglyConnected

ER_MAX_RETRIES = 1000


@dataclass(frozen=True)
class Graph:
    n_agents: int
    edges: frozenset[tuple[int, int]]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __init__(self, n_agents: int, edges: Iterable[tuple[int, int]]):
        n_agents = int(n_agents)
        if n_agents < 1:
            raise ValueError(f"n_agents must be positive, got {n_agents}")
        clean = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < n_agents and 0 <= j < n_agents):
                raise ValueError(f"edge ({i}, {j}) out of range for N={n_agents}")
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            clean.add((i, j))
        adj = [[] for _ in range(n_agents)]
        for i, j in clean:
            adj[i].append(j)
        object.__setattr__(self, "n_agents", n_agents)
        object.__setattr__(self, "edges", frozenset(clean))
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Out-neighbors of ``i`` in increasing order."""
        return self._adj[i]

    def out_degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self._adj])

    def reversed(self) -> "Graph":
        return Graph(self.n_agents, ((j, i) for i, j in self.edges))

    def bfs_distances(self, source: int) -> np.ndarray:
        """Hop counts from ``source``; unreachable vertices get -1."""
        dist = np.full(self.n_agents, -1, dtype=np.int64)
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self._adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist


def check_strong_connectivity(g: Graph) -> bool:
    """True iff every vertex reaches every other one along directed edges."""
    if g.n_agents == 1:
        return True
    # one search on g and one on the reversed graph, both from vertex 0
    return bool(np.all(g.bfs_distances(0) >= 0) and np.all(g.reversed().bfs_distances(0) >= 0))


@dataclass(frozen=True)
class RoutingTable:
    """Shortest-path distances ``dist[i, j]`` and first hops ``next_hop[i, j]``.

    ``next_hop[i, i]`` holds the designated neighbor of ``i`` (the agent whose
    proxy of ``i`` enters ``i``'s price).
    """

    graph: Graph
    dist: np.ndarray
    next_hop: np.ndarray
    designated: np.ndarray
    neighbor_mask: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.graph.n_agents

    def diameter(self) -> int:
        return int(self.dist.max())

    @property
    def return_dist(self) -> np.ndarray:
        """``d(n(i,i), i)``: hops from the designated neighbor back to ``i``.

        Equal to 1 whenever the designated link is reciprocal, which holds on
        every bidirected graph.
        """
        return self.dist[self.designated, np.arange(self.n_agents)]


def build_routing(g: Graph) -> RoutingTable:
    """BFS distances plus smallest-index shortest-path first hops."""
    n = g.n_agents
    if n < 2:
        raise NotStronglyConnected("routing needs at least two agents")
    dist = np.stack([g.bfs_distances(s) for s in range(n)])
    if np.any(dist < 0):
        i, j = map(int, np.argwhere(dist < 0)[0])
        raise NotStronglyConnected(f"agent {j} unreachable from agent {i}")

    next_hop = np.zeros((n, n), dtype=np.int64)
    designated = np.zeros(n, dtype=np.int64)
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        nbrs = g.neighbors(i)
        mask[i, list(nbrs)] = True
        designated[i] = nbrs[0]
        for j in range(n):
            if j == i:
                next_hop[i, j] = nbrs[0]
                continue
            # neighbors are sorted, so the first match is the smallest index
            next_hop[i, j] = next(a for a in nbrs if dist[a, j] == dist[i, j] - 1)
    for arr in (dist, next_hop, designated, mask):
        arr.setflags(write=False)
    return RoutingTable(g, dist, next_hop, designated, mask)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _bidirect(pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    for i, j in pairs:
        out.append((i, j))
        out.append((j, i))
    return out


def gen_full_binary_tree(n_agents: int) -> Graph:
    """Heap-indexed binary tree, every tree edge present in both directions."""
    return Graph(n_agents, _bidirect(((c - 1) // 2, c) for c in range(1, n_agents)))


def gen_directed_cycle(n_agents: int) -> Graph:
    return Graph(n_agents, ((i, (i + 1) % n_agents) for i in range(n_agents)))


def gen_complete(n_agents: int) -> Graph:
    return Graph(n_agents, ((i, j) for i in range(n_agents) for j in range(n_agents) if i != j))


def gen_erdos_renyi(n_agents: int, p: float, seed: int, max_retries: int = ER_MAX_RETRIES) -> Graph:
    """Undirected G(N, p) sample made bidirectional, resampled until connected.

    Attempt ``k`` uses seed ``seed + k``, so the result is a pure function of
    ``(n_agents, p, seed)``.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    iu, ju = np.triu_indices(n_agents, k=1)
    for attempt in range(max_retries):
        rng = np.random.default_rng(seed + attempt)
        keep = rng.random(iu.size) < p
        g = Graph(n_agents, _bidirect(zip(iu[keep].tolist(), ju[keep].tolist())))
        if check_strong_connectivity(g):
            return g
    raise RuntimeError(
        f"no connected G({n_agents}, {p}) sample in {max_retries} attempts from seed {seed}"
    )


# ---------------------------------------------------------------------------
# edge-list text format: header line "N", then one "i j" per directed edge
# ---------------------------------------------------------------------------


def format_edge_list(g: Graph) -> str:
    lines = [str(g.n_agents)] + [f"{i} {j}" for i, j in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows:
        raise ValueError("empty edge list")
    n = int(rows[0])
    edges = []
    for r in rows[1:]:
        parts = r.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {r!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, edges)


def write_edge_list(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(g))


def read_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())

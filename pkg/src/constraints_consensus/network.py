"""Time-varying digraphs, the three graph models, and connectivity queries.

Nodes are ``0 .. n-1``.  A schedule is either STATIC (one edge set) or
PERIODIC (a list of edge sets cycled by round).  Undirected graphs are stored
as bidirected digraphs.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from .errors import ConnectivityRetryExhausted, UnsupportedSchedule

STATIC = "static"
PERIODIC = "periodic"
INFINITE = math.inf


@dataclass(frozen=True)
class TimeVaryingDigraph:
    n: int
    edge_sets: tuple  # tuple of frozensets of (i, j)
    kind: str = STATIC

    def __post_init__(self):
        if self.kind not in (STATIC, PERIODIC):
            raise UnsupportedSchedule(f"unknown schedule kind {self.kind!r}")
        if not self.edge_sets:
            raise ValueError("at least one edge set is required")
        if self.kind == STATIC and len(self.edge_sets) != 1:
            raise ValueError("a static schedule has exactly one edge set")
        for edges in self.edge_sets:
            for i, j in edges:
                if i == j:
                    raise ValueError(f"self-loop at node {i}")
                if not (0 <= i < self.n and 0 <= j < self.n):
                    raise ValueError(f"edge {(i, j)} outside 0..{self.n - 1}")

    @classmethod
    def static(cls, n: int, edges: Iterable[tuple[int, int]]) -> "TimeVaryingDigraph":
        return cls(n, (frozenset((int(i), int(j)) for i, j in edges),), STATIC)

    @classmethod
    def undirected(cls, n: int, edges: Iterable[tuple[int, int]]) -> "TimeVaryingDigraph":
        both = set()
        for i, j in edges:
            both.add((int(i), int(j)))
            both.add((int(j), int(i)))
        return cls.static(n, both)

    @classmethod
    def periodic(cls, n: int, edge_sets: Sequence[Iterable[tuple[int, int]]]) -> "TimeVaryingDigraph":
        return cls(n, tuple(frozenset((int(i), int(j)) for i, j in es) for es in edge_sets), PERIODIC)

    @property
    def period(self) -> int:
        return len(self.edge_sets)

    def edges_at(self, t: int) -> frozenset:
        return self.edge_sets[t % len(self.edge_sets)]

    @cached_property
    def _in_lists(self) -> tuple:
        out = []
        for edges in self.edge_sets:
            nbrs = [[] for _ in range(self.n)]
            for i, j in edges:
                nbrs[j].append(i)
            out.append(tuple(tuple(sorted(x)) for x in nbrs))
        return tuple(out)

    def in_neighbors(self, i: int, t: int = 0) -> tuple:
        return self._in_lists[t % len(self.edge_sets)][i]

    @cached_property
    def _out_lists(self) -> tuple:
        out = []
        for edges in self.edge_sets:
            nbrs = [[] for _ in range(self.n)]
            for i, j in edges:
                nbrs[i].append(j)
            out.append(tuple(tuple(sorted(x)) for x in nbrs))
        return tuple(out)

    def out_neighbors(self, i: int, t: int = 0) -> tuple:
        return self._out_lists[t % len(self.edge_sets)][i]

    def max_in_degree(self) -> int:
        return max((len(x) for lists in self._in_lists for x in lists), default=0)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "schedule_kind": self.kind,
            "edge_sets": [sorted([i, j] for i, j in es) for es in self.edge_sets],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TimeVaryingDigraph":
        return cls(
            int(doc["n"]),
            tuple(frozenset((int(i), int(j)) for i, j in es) for es in doc["edge_sets"]),
            doc.get("schedule_kind", STATIC),
        )


@dataclass(frozen=True)
class GraphMetrics:
    diameter: float  # int, or INFINITE
    strongly_connected: bool


def _bfs(n: int, out: list[list[int]], src: int) -> list[int]:
    dist = [-1] * n
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in out[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def edge_set_metrics(n: int, edges: Iterable[tuple[int, int]]) -> GraphMetrics:
    out = [[] for _ in range(n)]
    for i, j in edges:
        out[i].append(j)
    diam = 0
    for s in range(n):
        dist = _bfs(n, out, s)
        if min(dist) < 0:
            return GraphMetrics(INFINITE, False)
        diam = max(diam, max(dist))
    return GraphMetrics(diam, True)


def graph_metrics(g: TimeVaryingDigraph, t: int = 0) -> GraphMetrics:
    """All-pairs BFS distances on the edge set active at round ``t``."""
    return edge_set_metrics(g.n, g.edges_at(t))


def diameter(g: TimeVaryingDigraph, t: int = 0) -> float:
    return graph_metrics(g, t).diameter


def is_jointly_strongly_connected(g: TimeVaryingDigraph, window: int | None = None) -> bool:
    """Strong connectivity of the union of ``window`` consecutive edge sets from every phase.

    For a periodic schedule the infinite union from any time is the union
    over one period, which is the default window.
    """
    if g.kind not in (STATIC, PERIODIC):
        raise UnsupportedSchedule(g.kind)
    window = g.period if window is None else window
    if window < 1:
        raise ValueError("window must be positive")
    for phase in range(g.period):
        union = set()
        for k in range(window):
            union |= g.edges_at(phase + k)
        if not edge_set_metrics(g.n, union).strongly_connected:
            return False
    return True


# -- generators --------------------------------------------------------------

def gen_line(n: int) -> TimeVaryingDigraph:
    if n < 2:
        raise ValueError("line graph needs n >= 2")
    return TimeVaryingDigraph.undirected(n, [(i, i + 1) for i in range(n - 1)])


def gen_complete(n: int) -> TimeVaryingDigraph:
    return TimeVaryingDigraph.undirected(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def gen_directed_cycle(n: int) -> TimeVaryingDigraph:
    return TimeVaryingDigraph.static(n, [(i, (i + 1) % n) for i in range(n)])


def erdos_renyi_probability(n: int, epsilon: float) -> float:
    return (1.0 + epsilon) * math.log(n) / n


def gen_erdos_renyi(n: int, epsilon: float, rng: np.random.Generator, retries: int = 100) -> TimeVaryingDigraph:
    """Undirected G(n, p) with ``p = (1 + eps) log(n) / n``, redrawn until connected."""
    if n < 2 or epsilon <= 0:
        raise ValueError("need n >= 2 and epsilon > 0")
    p = min(1.0, erdos_renyi_probability(n, epsilon))
    iu = np.triu_indices(n, k=1)
    for _ in range(retries):
        keep = rng.random(len(iu[0])) < p
        g = TimeVaryingDigraph.undirected(n, zip(iu[0][keep], iu[1][keep]))
        if graph_metrics(g).strongly_connected:
            return g
    raise ConnectivityRetryExhausted(f"no connected G({n}, {p:.4f}) in {retries} draws")


def connectivity_radius(points: np.ndarray) -> float:
    """Longest edge of the Euclidean minimum spanning tree."""
    if len(points) < 2:
        return 0.0
    mst = minimum_spanning_tree(squareform(pdist(points)))
    return float(mst.data.max()) if mst.nnz else 0.0


def disk_edges(points: np.ndarray, radius: float) -> list[tuple[int, int]]:
    D = squareform(pdist(points))
    n = len(points)
    return [(i, j) for i in range(n) for j in range(n) if i != j and D[i, j] <= radius]


def gen_random_geometric(n: int, rng: np.random.Generator, return_points: bool = False):
    """Uniform points in the unit square joined at the smallest connecting radius."""
    if n < 2:
        raise ValueError("need n >= 2")
    pts = rng.random((n, 2))
    r = connectivity_radius(pts)
    g = TimeVaryingDigraph.static(n, disk_edges(pts, r))
    if return_points:
        return g, pts, r
    return g

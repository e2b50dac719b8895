"""Formation control: robots agree on an optimal shape and move onto it.

Robots in the plane communicate over the disk graph of radius ``r_cmm``.
Each round a robot runs one constraints-consensus step on the shape problem
over the initial positions (ball, stripe or annulus), projects itself onto
the current shape estimate, and moves toward that point by at most
``r_ctr`` while keeping every current communication edge (until it halts).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import compare_values, make_basis
from .consensus import _solve, global_value
from .errors import InitialGraphDisconnected, InvariantViolation, NotStripeGeneric, PNotInQ
from .geometry import (
    AnnulusProblem,
    BallProblem,
    StripeProblem,
    annulus_radii,
    as_points,
    stripe_generic_check,
)
from .network import TimeVaryingDigraph, graph_metrics

POINT = "point"
LINE = "line"
CIRCLE = "circle"
SHAPES = (POINT, LINE, CIRCLE)

# motion disks are shrunk by this relative amount so that rounding never
# pushes two neighbors beyond r_cmm
DISK_SHRINK = 1e-9


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    def contains(self, p, tol: float = 0.0) -> bool:
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) <= self.radius + tol


@dataclass(frozen=True)
class PointShape:
    p: tuple


@dataclass(frozen=True)
class LineShape:
    point: tuple
    direction: tuple  # unit


@dataclass(frozen=True)
class CircleShape:
    center: tuple
    radius: float


def disk_graph(positions, r_cmm: float) -> TimeVaryingDigraph:
    P = np.asarray(positions, dtype=float)
    n = len(P)
    edges = []
    for i in range(n):
        for j in range(n):
            if i != j and math.hypot(*(P[i] - P[j])) <= r_cmm:
                edges.append((i, j))
    return TimeVaryingDigraph.static(n, edges)


def motion_constraint_set(p, neighbors: Sequence, r_cmm: float) -> list[Disk]:
    """Disks of radius ``r_cmm / 2`` about the midpoints to each neighbor (empty if none)."""
    r = 0.5 * r_cmm * (1.0 - DISK_SHRINK)
    return [Disk(((p[0] + q[0]) / 2, (p[1] + q[1]) / 2), r) for q in neighbors]


def _exit_parameter(p, d, disk: Disk) -> float:
    # largest t with |p + t d - c| <= r
    fx, fy = p[0] - disk.center[0], p[1] - disk.center[1]
    a = d[0] * d[0] + d[1] * d[1]
    b = 2.0 * (d[0] * fx + d[1] * fy)
    c = fx * fx + fy * fy - disk.radius * disk.radius
    disc = b * b - 4 * a * c
    if disc < 0:
        return 0.0
    return (-b + math.sqrt(disc)) / (2 * a)


def fti(p, q, region: Sequence[Disk], tol: float = 1e-9) -> tuple:
    """Point of the segment ``[p, q]`` closest to ``q`` inside the disk intersection ``region``."""
    p = (float(p[0]), float(p[1]))
    q = (float(q[0]), float(q[1]))
    scale = max((dk.radius for dk in region), default=1.0)
    for dk in region:
        if not dk.contains(p, tol * max(1.0, scale)):
            raise PNotInQ(f"{p} is outside the disk at {dk.center} of radius {dk.radius}")
    if all(dk.contains(q) for dk in region):
        return q
    d = (q[0] - p[0], q[1] - p[1])
    t = min(_exit_parameter(p, d, dk) for dk in region)
    t = min(1.0, max(0.0, t))
    x = (p[0] + t * d[0], p[1] + t * d[1])
    # rounding may leave x a hair outside a disk that contains p
    inside = [dk for dk in region if dk.contains(p)]
    while t > 0 and not all(dk.contains(x) for dk in inside):
        t = t * (1 - 1e-12) if t > 1e-15 else 0.0
        x = (p[0] + t * d[0], p[1] + t * d[1])
    return x


def _problem_for(shape: str, points):
    if shape == POINT:
        return BallProblem()
    if shape == LINE:
        return StripeProblem.for_points(points)
    if shape == CIRCLE:
        return AnnulusProblem()
    raise ValueError(f"unknown shape {shape!r}")


def shape_from_value(shape: str, value):
    if shape == POINT:
        return PointShape((value[2], value[3]))
    if shape == LINE:
        _, w, nx, ny, lo = value
        if nx < -1.5:  # a single point determines no line
            return None
        off = lo + w / 2
        return LineShape((nx * off, ny * off), (-ny, nx))
    r, R = annulus_radii(value)
    return CircleShape((value[2], value[3]), (r + R) / 2)


def target_set(B: Sequence, shape: str):
    """Shape equidistant from the boundary of the optimal ball, stripe or annulus of ``B``.

    For a line only an ambiguous optimum (two optimal stripes with different
    normals) is rejected, with ``NotStripeGeneric`` from the stripe value.
    """
    pts = as_points(B)
    prob = _problem_for(shape, pts)
    return shape_from_value(shape, prob.value(pts))


def closest_point_on_shape(p, s) -> tuple:
    """Euclidean projection; ``None`` (no shape yet) leaves ``p`` in place."""
    if s is None:
        return (p[0], p[1])
    if isinstance(s, PointShape):
        return s.p
    if isinstance(s, LineShape):
        (ox, oy), (dx, dy) = s.point, s.direction
        t = (p[0] - ox) * dx + (p[1] - oy) * dy
        return (ox + t * dx, oy + t * dy)
    cx, cy = s.center
    vx, vy = p[0] - cx, p[1] - cy
    norm = math.hypot(vx, vy)
    if norm == 0:
        vx, vy, norm = 1.0, 0.0, 1.0
    return (cx + s.radius * vx / norm, cy + s.radius * vy / norm)


def distance_to_shape(p, s) -> float:
    q = closest_point_on_shape(p, s)
    return math.hypot(p[0] - q[0], p[1] - q[1])


@dataclass
class FormationConfig:
    shape: str = POINT
    r_cmm: float = 1.0
    r_ctr: float = 0.01
    max_rounds: int = 2000
    positions: list | None = None
    n: int = 6  # used when positions is None
    spread: float | None = None  # side of the random square; default 0.6 r_cmm sqrt(n)
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.r_cmm <= 0 or self.r_ctr <= 0:
            raise ValueError("r_cmm and r_ctr must be positive")

    @classmethod
    def from_json(cls, doc: dict) -> "FormationConfig":
        return cls(**doc)


@dataclass
class FormationTrace:
    shape: str
    positions: list  # positions[t] is an (n, 2) array
    halted: list  # halted[t][i]
    values: list  # values[t][i]
    oracle_value: tuple
    final_shape: object
    consensus_round: int | None
    halt_rounds: list
    motion_violations: int
    edge_violations: int
    post_halt_disconnections: int

    @property
    def rounds(self) -> int:
        return len(self.positions) - 1

    def final_distances(self) -> list[float]:
        return [distance_to_shape(p, self.final_shape) for p in self.positions[-1]]

    def summary(self) -> dict:
        return {
            "shape": self.shape,
            "rounds": self.rounds,
            "consensus_round": self.consensus_round,
            "halt_rounds": self.halt_rounds,
            "motion_violations": self.motion_violations,
            "edge_violations": self.edge_violations,
            "post_halt_disconnections": self.post_halt_disconnections,
            "final_positions": [list(map(float, p)) for p in self.positions[-1]],
            "max_final_distance": max(self.final_distances()),
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)

    def write_csv(self, path) -> None:
        width = max(len(v) for row in self.values for v in row)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "robot", "x", "y", "halted"] + [f"v{k}" for k in range(width)])
            for t, (P, H, V) in enumerate(zip(self.positions, self.halted, self.values)):
                for i in range(len(P)):
                    w.writerow([t, i, P[i][0], P[i][1], int(H[i])] + list(V[i]))


def random_cluster(n: int, r_cmm: float, rng: np.random.Generator, spread: float | None = None,
                   generic: bool = False, tries: int = 1000) -> list[tuple]:
    """Uniform points in a square, redrawn until the disk graph is connected."""
    side = spread if spread is not None else 0.6 * r_cmm * math.sqrt(n)
    for _ in range(tries):
        pts = as_points(rng.random((n, 2)) * side)
        if len(set(pts)) < n:
            continue
        if generic and not stripe_generic_check(pts):
            continue
        if n == 1 or graph_metrics(disk_graph(pts, r_cmm)).strongly_connected:
            return pts
    raise InitialGraphDisconnected(f"no connected cluster of {n} robots in {tries} draws")


def run_move_to_consensus_shape(cfg: FormationConfig, seed: int | None = None, check: bool = True) -> FormationTrace:
    seed = cfg.seed if seed is None else seed
    ss = np.random.SeedSequence(seed)
    pos_rng, alg_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    if cfg.positions is not None:
        P0 = as_points(cfg.positions)
    else:
        P0 = random_cluster(cfg.n, cfg.r_cmm, pos_rng, cfg.spread, generic=cfg.shape == LINE)
    n = len(P0)
    if len(set(P0)) != n:
        raise ValueError("initial positions must be distinct")
    if n > 1 and not graph_metrics(disk_graph(P0, cfg.r_cmm)).strongly_connected:
        raise InitialGraphDisconnected("initial disk graph is disconnected")
    if cfg.shape == LINE and n >= 3 and not stripe_generic_check(P0):
        raise NotStripeGeneric("initial positions are not stripe-generic")

    prob = _problem_for(cfg.shape, P0)
    oracle = global_value(prob, P0)
    bases = [make_basis([p], prob.delta) for p in P0]
    vals = [prob.value(B) for B in bases]
    unchanged = [0] * n
    halted = [False] * n
    halt_rounds: list = [None] * n
    pos = [tuple(p) for p in P0]
    hist_pos = [np.array(pos)]
    hist_halt = [list(halted)]
    hist_val = [list(vals)]
    consensus_round = 0 if all(compare_values(v, oracle) == 0 for v in vals) else None
    motion_bad = edge_bad = post_halt = 0
    threshold = 2 * n

    for t in range(1, cfg.max_rounds + 1):
        g = disk_graph(pos, cfg.r_cmm)
        nbrs = [g.in_neighbors(i) for i in range(n)]
        # consensus step on the shape problem over the initial positions
        new_bases = []
        for i in range(n):
            pool = [P0[i]] + list(bases[i])
            for j in nbrs[i]:
                pool.extend(bases[j])
            new_bases.append(_solve(prob, pool, bases[i], alg_rng))
        for i in range(n):
            v = prob.value(new_bases[i])
            cmp = compare_values(v, vals[i])
            if cmp < 0:
                raise InvariantViolation(f"robot {i} shape value decreased at round {t}")
            unchanged[i] = unchanged[i] + 1 if cmp == 0 else 0
            bases[i], vals[i] = new_bases[i], v
            if not halted[i] and unchanged[i] >= threshold:
                halted[i] = True
                halt_rounds[i] = t
        if consensus_round is None and all(compare_values(v, oracle) == 0 for v in vals):
            consensus_round = t
        # motion
        new_pos = []
        for i in range(n):
            target = closest_point_on_shape(pos[i], shape_from_value(cfg.shape, vals[i]))
            region = [Disk(pos[i], cfg.r_ctr)]
            if not halted[i]:
                region += motion_constraint_set(pos[i], [pos[j] for j in nbrs[i]], cfg.r_cmm)
            new_pos.append(fti(pos[i], target, region))
        for i in range(n):
            if math.dist(new_pos[i], pos[i]) > cfg.r_ctr + 1e-12:
                motion_bad += 1
        for i in range(n):
            for j in nbrs[i]:
                if math.dist(new_pos[i], new_pos[j]) > cfg.r_cmm:
                    if halted[i] or halted[j]:
                        post_halt += 1
                    else:
                        edge_bad += 1
        if check and (motion_bad or edge_bad):
            raise InvariantViolation(f"motion or connectivity invariant failed at round {t}")
        pos = new_pos
        hist_pos.append(np.array(pos))
        hist_halt.append(list(halted))
        hist_val.append(list(vals))
        if all(halted):
            final = shape_from_value(cfg.shape, vals[0])
            if all(distance_to_shape(p, final) <= 1e-12 for p in pos):
                break

    return FormationTrace(
        shape=cfg.shape,
        positions=hist_pos,
        halted=hist_halt,
        values=hist_val,
        oracle_value=oracle,
        final_shape=shape_from_value(cfg.shape, oracle),
        consensus_round=consensus_round,
        halt_rounds=halt_rounds,
        motion_violations=motion_bad,
        edge_violations=edge_bad,
        post_halt_disconnections=post_halt,
    )

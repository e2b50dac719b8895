"""Set-membership localization of a moving target by a sensor network.

Each sensor sees a half-plane containing the target.  Sets are carried as
eight half-planes: for each of four directions ``theta``, the two
constraints that support the farthest point of the feasible set in that
direction (the ``pi_lp`` projection).  The distributed algorithm is
constraints consensus on these direction-wise linear programs, with every
stored half-plane relaxed by ``v_max`` per round to account for motion.
"""
from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import FINITE, brute_force_basis, compare_values, subex_lp
from .errors import Infeasible, InvariantViolation
from .lp import HalfSpace, LPProblem
from .network import TimeVaryingDigraph

CONTAIN_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("empty box")

    def half_planes(self) -> tuple[HalfSpace, ...]:
        return (
            HalfSpace((1.0, 0.0), self.x_max),
            HalfSpace((-1.0, 0.0), -self.x_min),
            HalfSpace((0.0, 1.0), self.y_max),
            HalfSpace((0.0, -1.0), -self.y_min),
        )

    def contains(self, p) -> bool:
        return self.x_min <= p[0] <= self.x_max and self.y_min <= p[1] <= self.y_max


def slack(h: HalfSpace, p) -> float:
    return h.b - (h.a[0] * p[0] + h.a[1] * p[1])


def contains_all(planes: Sequence[HalfSpace], p, tol: float = CONTAIN_TOL) -> bool:
    return all(slack(h, p) >= -tol for h in planes)


# -- target and sensors ----------------------------------------------------------

def _fold(x: float, lo: float, hi: float) -> float:
    width = hi - lo
    y = (x - lo) % (2 * width)
    return lo + (y if y <= width else 2 * width - y)


def simulate_target(steps: int, v_max: float, box: Box, rng: np.random.Generator, start=None) -> np.ndarray:
    """Reflected random walk; returns ``steps + 1`` positions starting at ``start``."""
    if v_max < 0:
        raise ValueError("v_max must be nonnegative")
    if start is None:
        start = (rng.uniform(box.x_min, box.x_max), rng.uniform(box.y_min, box.y_max))
    traj = np.empty((steps + 1, 2))
    traj[0] = start
    for t in range(1, steps + 1):
        speed = rng.uniform(0.0, v_max)
        ang = rng.uniform(0.0, 2 * math.pi)
        x = traj[t - 1, 0] + speed * math.cos(ang)
        y = traj[t - 1, 1] + speed * math.sin(ang)
        # folding is 1-Lipschitz, so the displacement stays within v_max
        traj[t] = (_fold(x, box.x_min, box.x_max), _fold(y, box.y_min, box.y_max))
    return traj


def sense(p, rng: np.random.Generator, w_max: float) -> HalfSpace:
    """Half-plane with a uniform random unit normal and ``p`` at depth ``U[0, w_max]``."""
    if w_max < 0:
        raise ValueError("w_max must be nonnegative")
    ang = rng.uniform(0.0, 2 * math.pi)
    a = (math.cos(ang), math.sin(ang))
    return HalfSpace(a, a[0] * p[0] + a[1] * p[1] + rng.uniform(0.0, w_max))


def time_update(h: HalfSpace, v_max: float) -> HalfSpace:
    return h.translated(v_max)


# -- eight half-plane projection --------------------------------------------------

class PiLP:
    """The ``pi_lp`` projection with a value cache per direction.

    For direction ``theta`` the planar program maximizes ``u.x`` with
    ``u = (cos theta, sin theta)``, ties broken toward ``-w`` with ``w`` the
    counterclockwise normal of ``u``.  It is solved in the rotated frame
    ``z = (u.x, w.x)`` so the cost is exactly ``(-1, 0)``.
    """

    def __init__(self, box: Box, directions: int = 4, seed: int = 0):
        if directions < 3:
            raise ValueError("need at least three directions")
        self.box = box
        self.directions = directions
        self.thetas = [2 * math.pi * k / directions for k in range(directions)]
        self.frames = []
        for th in self.thetas:
            u = (math.cos(th), math.sin(th))
            self.frames.append((u, (-u[1], u[0])))
        self.problems = [LPProblem((-1.0, 0.0), box=None) for _ in self.thetas]
        self.rng = np.random.default_rng(seed)
        self._rot: list[dict] = [dict() for _ in self.thetas]
        box_planes = box.half_planes()
        self.box_planes = box_planes
        self.starts = []
        for k, prob in enumerate(self.problems):
            rot = [self._rotate(k, h) for h in box_planes]
            self.starts.append(brute_force_basis(prob, rot))

    def _rotate(self, k: int, h: HalfSpace) -> HalfSpace:
        cache = self._rot[k]
        try:
            return cache[h][0]
        except KeyError:
            pass
        u, w = self.frames[k]
        r = HalfSpace((h.a[0] * u[0] + h.a[1] * u[1], h.a[0] * w[0] + h.a[1] * w[1]), h.b)
        cache[h] = (r, h)
        cache.setdefault(("inv", r), h)
        return r

    def solve(self, H: Sequence[HalfSpace]) -> tuple[tuple[HalfSpace, ...], list]:
        """Return the eight (or ``2 * directions``) half-planes and the per-direction values."""
        planes: list[HalfSpace] = []
        values = []
        uniq = set(H) | set(self.box_planes)
        for k, prob in enumerate(self.problems):
            pool = [self._rotate(k, h) for h in uniq]
            B = subex_lp(prob, pool, self.starts[k], self.rng)
            val = prob.value(B)
            if val[0] != FINITE:
                raise Infeasible(f"inconsistent half-planes in direction {self.thetas[k]:.3f}")
            inv = self._rot[k]
            members = sorted(set(B))
            if len(members) == 1:
                members = members * 2
            planes.extend(inv[("inv", r)] for r in members)
            values.append(val)
        return tuple(planes), values

    def __call__(self, H: Sequence[HalfSpace]) -> tuple[HalfSpace, ...]:
        return self.solve(H)[0]

    @staticmethod
    def support(values: list) -> list[float]:
        """Largest ``u.x`` over the set, per direction."""
        return [-v[1] for v in values]


def pi_lp(H: Sequence[HalfSpace], box: Box, directions: int = 4, seed: int = 0) -> tuple[HalfSpace, ...]:
    return PiLP(box, directions, seed)(H)


# -- centralized recursion ---------------------------------------------------------

def centralized_recursion(measurements: Sequence[Sequence[HalfSpace]], v_max: float, box: Box,
                          directions: int = 4, seed: int = 0) -> list[tuple[HalfSpace, ...]]:
    """``E(t|t)`` for each step; ``measurements[t]`` lists the half-planes sensed at ``t``."""
    proj = PiLP(box, directions, seed)
    if not measurements or not measurements[0]:
        raise ValueError("the recursion starts from measurements at time 0")
    est = [proj(measurements[0])]
    for new in measurements[1:]:
        predicted = [time_update(h, v_max) for h in est[-1]]
        est.append(proj(predicted + list(new)))
    return est


# -- distributed algorithm ----------------------------------------------------------

@dataclass
class LocalizationConfig:
    n: int = 8
    m: int = 3
    v_max: float = 0.01
    w_max: float = 0.2
    box: Box = field(default_factory=Box)
    rounds: int = 40
    sense_every: int = 1  # 0: sense only at round 0
    directions: int = 4
    graph: str = "line"  # line | erdos_renyi | rgg
    seed: int = 0

    @classmethod
    def from_json(cls, doc: dict) -> "LocalizationConfig":
        doc = dict(doc)
        if "box" in doc:
            doc["box"] = Box(**doc["box"]) if isinstance(doc["box"], dict) else Box(*doc["box"])
        return cls(**doc)


@dataclass
class LocalizationTrace:
    n: int
    target: np.ndarray  # (rounds + 1, 2)
    polytopes: list  # polytopes[t][i]: tuple of half-planes
    supports: list  # supports[t][i]: per-direction support values
    containment_violations: int
    memory_high_water: list
    memory_bound: list

    def summary(self) -> dict:
        return {
            "n": self.n,
            "rounds": len(self.polytopes) - 1,
            "containment_violations": self.containment_violations,
            "memory_high_water": self.memory_high_water,
            "memory_bound": self.memory_bound,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            width = len(self.polytopes[0][0])
            head = ["round", "node"]
            for k in range(width):
                head += [f"a{k}_x", f"a{k}_y", f"b{k}"]
            w.writerow(head + ["target_x", "target_y"])
            for t, row in enumerate(self.polytopes):
                for i, planes in enumerate(row):
                    cells = [t, i]
                    for h in planes:
                        cells += [h.a[0], h.a[1], h.b]
                    w.writerow(cells + list(self.target[t]))

    def write_json(self, path, extra: dict | None = None) -> None:
        with open(path, "w") as fh:
            json.dump({**self.summary(), **(extra or {})}, fh, indent=2)


def run_eight_half_planes(
    graph: TimeVaryingDigraph,
    target: np.ndarray,
    m: int,
    v_max: float,
    w_max: float,
    box: Box,
    rng: np.random.Generator,
    sense_every: int = 1,
    directions: int = 4,
    check: bool = True,
) -> tuple[LocalizationTrace, list]:
    """Run the distributed eight half-planes algorithm along a target trajectory.

    ``target[t]`` is the position at round ``t``; the number of rounds is
    ``len(target) - 1``.  Returns the trace and the list of measurements per
    round (for the centralized oracle).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = graph.n
    proj = PiLP(box, directions, seed=int(rng.integers(2**32)))
    rounds = len(target) - 1
    width = 2 * directions

    def is_sensing(t: int) -> bool:
        return t == 0 or (sense_every > 0 and t % sense_every == 0)

    sensed = [[sense(target[0], rng, w_max) for _ in range(n)]]
    meas = [deque([h], maxlen=m) for h in sensed[0]]
    opt = [(h,) * width for h in sensed[0]]
    polys = [list(opt)]
    supports = [[None] * n]
    violations = sum(not contains_all(P, target[0]) for P in opt)
    high = [0] * n
    bound = [width + m + width * max(len(graph.in_neighbors(i, t)) for t in range(graph.period)) for i in range(n)]
    for t in range(1, rounds + 1):
        outbox = opt
        new_meas = [sense(target[t], rng, w_max) for _ in range(n)] if is_sensing(t) else None
        sensed.append(new_meas or [])
        new_opt, sup_row = [], []
        for i in range(n):
            received = [h for j in graph.in_neighbors(i, t) for h in outbox[j]]
            meas[i] = deque((time_update(h, v_max) for h in meas[i]), maxlen=m)
            if new_meas is not None:
                meas[i].append(new_meas[i])
            pool = list(meas[i]) + [time_update(h, v_max) for h in opt[i]] + [time_update(h, v_max) for h in received]
            high[i] = max(high[i], len(pool))
            planes, vals = proj.solve(pool)
            new_opt.append(planes)
            sup_row.append(PiLP.support(vals))
        opt = new_opt
        polys.append(list(opt))
        supports.append(sup_row)
        bad = sum(not contains_all(P, target[t]) for P in opt)
        if bad and check:
            raise InvariantViolation(f"{bad} nodes lost the target at round {t}")
        violations += bad
    trace = LocalizationTrace(n, np.asarray(target), polys, supports, violations, high, bound)
    return trace, sensed


def static_convergence_round(trace: LocalizationTrace, reference: tuple, ref_support: list, tol: float = 1e-9):
    """First round from which every node holds ``reference`` (as a multiset) with matching supports."""
    ref = sorted(reference)
    first = None
    for t in range(len(trace.polytopes)):
        ok = all(
            sorted(trace.polytopes[t][i]) == ref
            and trace.supports[t][i] is not None
            and all(compare_values((0, a), (0, b), tol) == 0 for a, b in zip(trace.supports[t][i], ref_support))
            for i in range(trace.n)
        )
        if ok and first is None:
            first = t
        elif not ok:
            first = None
    return first


def supports_monotone(trace: LocalizationTrace, tol: float = 1e-9) -> bool:
    """Per node and direction, the support value never increases (static target)."""
    rows = [r for r in trace.supports if r[0] is not None]
    for prev, cur in zip(rows, rows[1:]):
        for a, b in zip(prev, cur):
            if any(y > x + tol * max(1.0, abs(x)) for x, y in zip(a, b)):
                return False
    return True


def make_graph(kind: str, n: int, rng: np.random.Generator) -> TimeVaryingDigraph:
    from .network import gen_erdos_renyi, gen_line, gen_random_geometric

    if kind == "line":
        return gen_line(n)
    if kind == "erdos_renyi":
        return gen_erdos_renyi(n, 0.3, rng)
    if kind == "rgg":
        return gen_random_geometric(n, rng)
    raise ValueError(f"unknown graph model {kind!r}")


def run_scenario(cfg: LocalizationConfig):
    """Seeded end-to-end scenario: graph, trajectory, distributed run and centralized oracle."""
    ss = np.random.SeedSequence(cfg.seed)
    g_rng, t_rng, s_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    graph = make_graph(cfg.graph, cfg.n, g_rng)
    target = simulate_target(cfg.rounds, cfg.v_max, cfg.box, t_rng)
    trace, sensed = run_eight_half_planes(
        graph, target, cfg.m, cfg.v_max, cfg.w_max, cfg.box, s_rng, cfg.sense_every, cfg.directions
    )
    central = centralized_recursion(sensed, cfg.v_max, cfg.box, cfg.directions)
    return graph, trace, central, sensed

"""Planar geometric LP-type problems: smallest enclosing ball, stripe and annulus.

Constraints are points, stored as ``(x, y)`` float tuples.  Values are
tuples ``(FINITE, primary, tie-breaks...)``:

* ball:    ``(0, r, cx, cy)``
* stripe:  ``(0, width, nx, ny, lo)`` with the unit normal in the upper
  half-plane; a single point gets the sentinel normal ``(-2, -2)`` so it
  ranks below every pair
* annulus: ``(0, u - v, cx, cy, u, v)`` from the linear reformulation with
  ``R^2 = u + |c|^2`` and ``r^2 = v + |c|^2``
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import FINITE, AbstractProblem, Basis, Value, distinct, greedy_basis
from .errors import DegenerateCircumcircle, DuplicatePoints, Infeasible, NegativeRadicand, NotStripeGeneric, TooLarge
from .lp import _lexmin_kernel, lexmin_vertex_enumeration

Point = tuple  # (x, y)

GEOM_TOL = 1e-9
ANNULUS_BOX = 1e3
STRIPE_GENERIC_LIMIT = 60


def as_points(points: Iterable[Sequence[float]]) -> list[Point]:
    out = []
    for p in points:
        x, y = float(p[0]), float(p[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite point {p!r}")
        out.append((x, y))
    return out


def points_to_json(points: Iterable[Point]) -> str:
    return json.dumps([[x, y] for x, y in points])


def points_from_json(text: str) -> list[Point]:
    return as_points(json.loads(text))


@dataclass(frozen=True)
class Ball:
    center: Point
    radius: float

    def contains(self, p: Point, tol: float = GEOM_TOL) -> bool:
        return math.dist(p, self.center) <= self.radius + tol * max(1.0, self.radius)


@dataclass(frozen=True)
class Stripe:
    normal: Point
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, p: Point, tol: float = GEOM_TOL) -> bool:
        s = self.normal[0] * p[0] + self.normal[1] * p[1]
        scale = tol * max(1.0, abs(s))
        return self.lo - scale <= s <= self.hi + scale


@dataclass(frozen=True)
class Annulus:
    center: Point
    r: float
    R: float

    def contains(self, p: Point, tol: float = GEOM_TOL) -> bool:
        dist = math.dist(p, self.center)
        return self.r - tol * max(1.0, self.r) <= dist <= self.R + tol * max(1.0, self.R)


# -- ball ----------------------------------------------------------------------

def circumcircle(a: Point, b: Point, c: Point) -> tuple[float, float, float]:
    ax, ay = a
    bx, by = b[0] - ax, b[1] - ay
    cx, cy = c[0] - ax, c[1] - ay
    det = 2.0 * (bx * cy - by * cx)
    scale = max(1.0, bx * bx + by * by, cx * cx + cy * cy)
    if abs(det) <= 1e-12 * scale:
        raise DegenerateCircumcircle(f"collinear points {a}, {b}, {c}")
    b2, c2 = bx * bx + by * by, cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / det
    uy = (bx * c2 - cx * b2) / det
    return ax + ux, ay + uy, math.hypot(ux, uy)


def _support_ball(support: Sequence[Point]) -> tuple[float, float, float]:
    if len(support) == 1:
        return support[0][0], support[0][1], 0.0
    if len(support) == 2:
        (ax, ay), (bx, by) = support
        return (ax + bx) / 2, (ay + by) / 2, math.dist(support[0], support[1]) / 2
    return circumcircle(*support)


def _seb_value(pts: Sequence[Point], tol: float) -> Value:
    best = None
    for k in (1, 2, 3):
        for sup in itertools.combinations(pts, k):
            try:
                cx, cy, r = _support_ball(sup)
            except DegenerateCircumcircle:
                continue  # a collinear triple is dominated by its extreme pair
            if best is not None and r > best[1] + tol * max(1.0, r):
                continue
            lim = r + tol * max(1.0, r)
            if all(math.hypot(p[0] - cx, p[1] - cy) <= lim for p in pts):
                cand = (FINITE, r, cx, cy)
                if best is None or cand < best:
                    best = cand
    assert best is not None
    return best


class BallProblem(AbstractProblem):
    """Smallest enclosing ball in the plane, ``delta = 3``."""

    delta = 3
    exact_value = True

    def _compute_value(self, members: tuple) -> Value:
        return _seb_value(members, self.tol)

    def violates(self, basis: Basis, h: Point) -> bool:
        self.calls += 1
        if h in basis:
            return False
        _, r, cx, cy = self.value(basis)
        return math.hypot(h[0] - cx, h[1] - cy) > r + self.tol * max(1.0, r)

    @staticmethod
    def shape(value: Value) -> Ball:
        return Ball((value[2], value[3]), value[1])


def seb_exhaustive(points: Sequence[Point], tol: float = GEOM_TOL) -> Value:
    """Oracle: all pair and triple circles of the full set via numpy linear solves."""
    P = np.asarray(points, dtype=float)
    n = len(P)
    cands = [(0.0, P[0, 0], P[0, 1])] if n == 1 else []
    for i, j in itertools.combinations(range(n), 2):
        m = (P[i] + P[j]) / 2
        cands.append((float(np.linalg.norm(P[i] - P[j]) / 2), m[0], m[1]))
    for i, j, k in itertools.combinations(range(n), 3):
        M = 2.0 * np.array([P[j] - P[i], P[k] - P[i]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        rhs = np.array([P[j] @ P[j] - P[i] @ P[i], P[k] @ P[k] - P[i] @ P[i]])
        c = np.linalg.solve(M, rhs)
        cands.append((float(np.linalg.norm(c - P[i])), c[0], c[1]))
    best = None
    for r, cx, cy in cands:
        if np.all(np.hypot(P[:, 0] - cx, P[:, 1] - cy) <= r + tol * max(1.0, r)):
            v = (FINITE, float(r), float(cx), float(cy))
            if best is None or v < best:
                best = v
    if best is None and n >= 1:
        raise AssertionError("no enclosing candidate")
    return best


# -- stripe --------------------------------------------------------------------

def canonical_normal(nx: float, ny: float) -> Point:
    norm = math.hypot(nx, ny)
    nx, ny = nx / norm, ny / norm
    if ny < 0 or (ny == 0 and nx < 0):
        nx, ny = -nx, -ny
    return nx + 0.0, ny + 0.0


def _stripe_value(pts: Sequence[Point], tol: float) -> Value:
    if len(pts) == 1:
        return (FINITE, 0.0, -2.0, -2.0, 0.0)
    best = None
    for p, q in itertools.combinations(pts, 2):
        dx, dy = q[0] - p[0], q[1] - p[1]
        if dx == 0 and dy == 0:
            raise DuplicatePoints(f"repeated point {p}")
        nx, ny = canonical_normal(-dy, dx)
        proj = [nx * s[0] + ny * s[1] for s in pts]
        lo, hi = min(proj), max(proj)
        cand = (FINITE, hi - lo, nx, ny, lo)
        if best is None:
            best = cand
            continue
        scale = tol * max(1.0, cand[1], best[1])
        if abs(cand[1] - best[1]) <= scale:
            if abs(cand[2] - best[2]) > 1e-9 or abs(cand[3] - best[3]) > 1e-9:
                raise NotStripeGeneric(f"two stripes of width {cand[1]:.12g} with different normals")
            if cand < best:
                best = cand
        elif cand[1] < best[1]:
            best = cand
    return best


class StripeProblem(AbstractProblem):
    """Smallest enclosing stripe in the plane, ``delta = 5``.

    Candidate directions are the lines through pairs of points, which is
    exhaustive for the minimum-width stripe of a finite set.

    Five points do not always pin the stripe down: a convex hexagon can have
    every five-point subset strictly narrower than the whole.  ``delta`` is
    therefore a parameter; ``for_points`` uses ``max(5, |H|)``, which is
    always valid.
    """

    exact_value = True

    def __init__(self, delta: int = 5):
        super().__init__()
        self.delta = int(delta)

    @classmethod
    def for_points(cls, points: Sequence[Point]) -> "StripeProblem":
        return cls(max(5, len(set(points))))

    def basis_computation(self, basis: Basis, h: Point) -> Basis:
        self.calls += 1
        pool = distinct(basis + (h,))
        return greedy_basis(self, pool, self.value(pool))

    def _compute_value(self, members: tuple) -> Value:
        return _stripe_value(members, self.tol)

    def violates(self, basis: Basis, h: Point) -> bool:
        if len(set(basis)) < 3:
            return super().violates(basis, h)
        self.calls += 1
        if h in basis:
            return False
        _, w, nx, ny, lo = self.value(basis)
        s = nx * h[0] + ny * h[1]
        slack = self.tol * max(1.0, abs(s))
        return s < lo - slack or s > lo + w + slack

    @staticmethod
    def shape(value: Value) -> Stripe:
        return Stripe((value[2], value[3]), value[4], value[4] + value[1])


def stripe_exhaustive(points: Sequence[Point]) -> Value:
    """Oracle: every pair direction against the full set, vectorized."""
    P = np.asarray(points, dtype=float)
    if len(P) == 1:
        return (FINITE, 0.0, -2.0, -2.0, 0.0)
    i, j = np.triu_indices(len(P), k=1)
    D = P[j] - P[i]
    N = np.column_stack([-D[:, 1], D[:, 0]])
    N /= np.linalg.norm(N, axis=1)[:, None]
    flip = (N[:, 1] < 0) | ((N[:, 1] == 0) & (N[:, 0] < 0))
    N[flip] *= -1
    proj = N @ P.T
    width = proj.max(axis=1) - proj.min(axis=1)
    best = np.flatnonzero(width <= width.min() + GEOM_TOL * max(1.0, width.min()))
    k = min(best, key=lambda t: (N[t, 0], N[t, 1]))
    return (FINITE, float(width[k]), float(N[k, 0]) + 0.0, float(N[k, 1]) + 0.0, float(proj[k].min()))


def stripe_generic_check(points: Sequence[Point], tol: float = GEOM_TOL) -> bool:
    """True iff all point-to-line distances over distinct (point, line-through-two-others) triplets differ.

    A triplet ``(a, b, c)`` and ``(a, c, b)`` describe the same distance and
    count once.
    """
    pts = as_points(points)
    if len(set(pts)) != len(pts):
        raise DuplicatePoints("stripe-generic position needs distinct points")
    n = len(pts)
    if n > STRIPE_GENERIC_LIMIT:
        raise TooLarge(f"{n} points exceed the stripe-generic limit {STRIPE_GENERIC_LIMIT}")
    if n < 3:
        return True
    P = np.asarray(pts)
    b, c = np.triu_indices(n, k=1)
    L = P[c] - P[b]
    norms = np.linalg.norm(L, axis=1)
    if np.any(norms <= tol):
        return False  # numerically coincident points
    # |cross(c - b, a - b)| / |c - b| for every point a and every line (b, c)
    rel = P[:, None, :] - P[b][None, :, :]
    dist = np.abs(L[None, :, 0] * rel[..., 1] - L[None, :, 1] * rel[..., 0]) / norms[None, :]
    a = np.arange(n)[:, None]
    mask = (a != b[None, :]) & (a != c[None, :])
    vals = np.sort(dist[mask])
    return bool(np.all(np.diff(vals) > tol))


# -- annulus -------------------------------------------------------------------

_ANNULUS_COST = np.array([0.0, 0.0, 1.0, -1.0])


def _annulus_system(pts: Sequence[Point], box: float = ANNULUS_BOX) -> tuple[np.ndarray, np.ndarray]:
    P = np.asarray(pts, dtype=float).reshape(-1, 2)
    sq = (P * P).sum(axis=1)
    k = len(P)
    outer = np.column_stack([-2 * P, -np.ones(k), np.zeros(k)])
    inner = np.column_stack([2 * P, np.zeros(k), np.ones(k)])
    boxA = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [-1.0, 0, 0, 0], [0, -1.0, 0, 0]])
    A = np.vstack([outer, inner, boxA])
    b = np.concatenate([-sq, sq, np.full(4, box)])
    return A, b


def _annulus_value(pts: Sequence[Point], tol: float) -> Value:
    A, b = _annulus_system(pts)
    found, x = _lexmin_kernel(A, b, _ANNULUS_COST, tol)
    if not found:
        raise Infeasible("annulus program has no vertex; points outside the center box?")
    cx, cy, u, v = (float(t) for t in x)
    return (FINITE, u - v, cx, cy, u, v)


def annulus_radii(value: Value) -> tuple[float, float]:
    _, _, cx, cy, u, v = value
    c2 = cx * cx + cy * cy
    r2, R2 = v + c2, u + c2
    for name, q in (("r^2", r2), ("R^2", R2)):
        if q < -1e-9 * max(1.0, c2):
            raise NegativeRadicand(f"{name} = {q}")
    return math.sqrt(max(r2, 0.0)), math.sqrt(max(R2, 0.0))


class AnnulusProblem(AbstractProblem):
    """Smallest-area enclosing annulus in the plane, ``delta = 4``.

    Minimizes ``R^2 - r^2`` through the linear program in ``(c, u, v)``; the
    center is confined to a box of half-width ``ANNULUS_BOX``.
    """

    delta = 4
    exact_value = True

    def _compute_value(self, members: tuple) -> Value:
        return _annulus_value(members, self.tol)

    def violates(self, basis: Basis, h: Point) -> bool:
        self.calls += 1
        if h in basis:
            return False
        _, _, cx, cy, u, v = self.value(basis)
        s = h[0] * h[0] + h[1] * h[1] - 2 * (cx * h[0] + cy * h[1])
        slack = self.tol * (1.0 + abs(s) + abs(u) + abs(v))
        return s > u + slack or s < v - slack

    @staticmethod
    def shape(value: Value) -> Annulus:
        r, R = annulus_radii(value)
        return Annulus((value[2], value[3]), r, R)


def annulus_exhaustive(points: Sequence[Point]) -> Value:
    """Oracle: numpy vertex enumeration of the full four-variable program."""
    A, b = _annulus_system(points)
    val = lexmin_vertex_enumeration(A, b, _ANNULUS_COST)
    return (val[0], val[1]) + tuple(val[2:])


PROBLEMS = {"ball": BallProblem, "stripe": StripeProblem, "annulus": AnnulusProblem}
ORACLES = {"ball": seb_exhaustive, "stripe": stripe_exhaustive, "annulus": annulus_exhaustive}


def shape_of(problem: AbstractProblem, value: Value):
    return type(problem).shape(value)


def random_points(n: int, rng: np.random.Generator, generic: bool = False, scale: float = 1.0) -> list[Point]:
    """Uniform points in ``[0, scale]^2``; redrawn until stripe-generic if asked."""
    for _ in range(1000):
        pts = as_points(rng.random((n, 2)) * scale)
        if len(set(pts)) == n and (not generic or stripe_generic_check(pts)):
            return pts
    raise NotStripeGeneric("could not draw a stripe-generic set")


def geometric_problem(kind: str) -> AbstractProblem:
    return PROBLEMS[kind]()


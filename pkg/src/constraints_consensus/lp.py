"""Linear programs as abstract programs, plus the two stochastic LP models.

Values of a constraint collection are ``(FINITE, c.x, x_1, ..., x_d)`` for the
lexicographically smallest minimizer ``x``, or ``NEG_INF`` / ``POS_INF`` for
unbounded and infeasible collections.  Small systems are solved exactly by
enumerating active sets (``lexmin``); this is only ever applied to a handful
of constraints plus box faces.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .core import (
    FINITE,
    NEG_INF,
    POS_INF,
    AbstractProblem,
    Basis,
    Value,
    distinct,
    make_basis,
)
from .errors import DimensionMismatch

PROBE_BOX = 1e9
DEFAULT_BOX = 1e3


@dataclass(frozen=True, order=True)
class HalfSpace:
    """``{x : a.x <= b}``."""

    a: tuple
    b: float

    def __post_init__(self):
        if not any(self.a):
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "_hash", hash((self.a, self.b)))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def unit(cls, a: Sequence[float], b: float) -> "HalfSpace":
        """Half-space with the normal rescaled to unit length."""
        norm = math.hypot(*a)
        return cls(tuple(float(x) / norm for x in a), float(b) / norm)

    @property
    def d(self) -> int:
        return len(self.a)

    def slack(self, x: Sequence[float]) -> float:
        return self.b - sum(ai * xi for ai, xi in zip(self.a, x))

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        return self.slack(x) >= -tol * (1.0 + abs(self.b))

    def translated(self, amount: float) -> "HalfSpace":
        return HalfSpace(self.a, self.b + amount)


@dataclass(frozen=True)
class LinearProgram:
    """``min c.x  s.t.  a_i.x <= b_i``; ``box`` adds ``|x_j| <= box`` when set."""

    c: tuple
    constraints: tuple
    box: float | None = None

    def __post_init__(self):
        d = len(self.c)
        for h in self.constraints:
            if h.d != d:
                raise DimensionMismatch(f"constraint of dimension {h.d} in a {d}-dimensional LP")

    @property
    def d(self) -> int:
        return len(self.c)

    @property
    def n(self) -> int:
        return len(self.constraints)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        A = np.array([h.a for h in self.constraints], dtype=float).reshape(-1, self.d)
        b = np.array([h.b for h in self.constraints], dtype=float)
        return A, b

    def to_json(self) -> dict:
        doc = {
            "d": self.d,
            "n": self.n,
            "c": list(self.c),
            "rows": [{"a": list(h.a), "b": h.b} for h in self.constraints],
        }
        if self.box is not None:
            doc["box"] = self.box
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "LinearProgram":
        rows = tuple(HalfSpace(tuple(float(v) for v in r["a"]), float(r["b"])) for r in doc["rows"])
        lp = cls(tuple(float(v) for v in doc["c"]), rows, doc.get("box"))
        if "d" in doc and doc["d"] != lp.d:
            raise DimensionMismatch(f"declared d={doc['d']} but c has {lp.d} entries")
        return lp

    def dumps(self) -> str:
        return json.dumps(self.to_json())


# -- exact small-system solver ---------------------------------------------

@numba.njit(cache=True)
def _lexmin_kernel(A, b, c, tol):
    m, d = A.shape
    best = np.zeros(d)
    best_key = np.zeros(d + 1)
    found = False
    if m < d:
        return False, best
    idx = np.arange(d)
    M = np.empty((d, d))
    r = np.empty(d)
    x = np.empty(d)
    key = np.empty(d + 1)
    while True:
        for i in range(d):
            for j in range(d):
                M[i, j] = A[idx[i], j]
            r[i] = b[idx[i]]
        singular = False
        for col in range(d):
            piv = col
            big = abs(M[col, col])
            for i in range(col + 1, d):
                if abs(M[i, col]) > big:
                    big = abs(M[i, col])
                    piv = i
            if big < 1e-11:
                singular = True
                break
            if piv != col:
                for j in range(d):
                    tmp = M[col, j]
                    M[col, j] = M[piv, j]
                    M[piv, j] = tmp
                tmp = r[col]
                r[col] = r[piv]
                r[piv] = tmp
            for i in range(col + 1, d):
                f = M[i, col] / M[col, col]
                if f != 0.0:
                    for j in range(col, d):
                        M[i, j] -= f * M[col, j]
                    r[i] -= f * r[col]
        if not singular:
            for i in range(d - 1, -1, -1):
                s = r[i]
                for j in range(i + 1, d):
                    s -= M[i, j] * x[j]
                x[i] = s / M[i, i]
            feasible = True
            for i in range(m):
                s = 0.0
                mag = 0.0
                for j in range(d):
                    s += A[i, j] * x[j]
                    mag += abs(A[i, j] * x[j])
                if s > b[i] + tol * (1.0 + abs(b[i]) + mag):
                    feasible = False
                    break
            if feasible:
                cost = 0.0
                for j in range(d):
                    cost += c[j] * x[j]
                key[0] = cost
                for j in range(d):
                    key[j + 1] = x[j]
                better = not found
                if found:
                    for j in range(d + 1):
                        scale = max(1.0, abs(key[j]), abs(best_key[j]))
                        if abs(key[j] - best_key[j]) > tol * scale:
                            better = key[j] < best_key[j]
                            break
                if better:
                    found = True
                    for j in range(d + 1):
                        best_key[j] = key[j]
                    for j in range(d):
                        best[j] = x[j]
        # next combination
        i = d - 1
        while i >= 0 and idx[i] == m - d + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, d):
            idx[j] = idx[j - 1] + 1
    return found, best


@functools.lru_cache(maxsize=64)
def _box_rows(d: int, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(d)
    A, b = np.vstack([eye, -eye]), np.full(2 * d, float(half_width))
    A.flags.writeable = False
    b.flags.writeable = False
    return A, b


def lexmin(A: np.ndarray, b: np.ndarray, c: np.ndarray, box: float | None = None, tol: float = 1e-9) -> Value:
    """Lexicographically smallest minimizer of ``c.x`` over ``Ax <= b``.

    With ``box`` the faces ``|x_j| <= box`` are part of the system.  Without
    it a probe box of half-width ``PROBE_BOX`` is added and a solution on the
    probe box is reported as unbounded.
    """
    A = np.asarray(A, dtype=float).reshape(-1, len(c))
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    d = len(c)
    half = PROBE_BOX if box is None else box
    BA, Bb = _box_rows(d, float(half))
    m = len(b)
    AA = np.empty((m + 2 * d, d))
    AA[:m] = A
    AA[m:] = BA
    bb = np.empty(m + 2 * d)
    bb[:m] = b
    bb[m:] = Bb
    found, x = _lexmin_kernel(AA, bb, c, tol)
    if not found:
        return POS_INF
    if box is None and np.max(np.abs(x)) >= PROBE_BOX * (1 - 1e-6):
        return NEG_INF
    return (FINITE, float(c @ x)) + tuple(float(v) for v in x)


def lex_point(value: Value) -> tuple:
    """Minimizer stored in a finite LP value."""
    return value[2:]


def lex_min_point(lp: LinearProgram) -> Value:
    A, b = lp.matrices()
    return lexmin(A, b, np.array(lp.c, dtype=float), lp.box)


# -- abstract program transcription ----------------------------------------

class LPProblem(AbstractProblem):
    """An LP transcribed into an abstract program with ``delta = d``.

    ``box`` bounds every coordinate and is part of every constraint
    collection (it is not a member of H); it gives single constraints a
    finite value.  ``lex_tiebreak=False`` orders values by cost alone, which
    breaks locality on degenerate instances and is kept for regression tests.
    """

    def __init__(self, c: Sequence[float], box: float | None = DEFAULT_BOX, lex_tiebreak: bool = True):
        super().__init__()
        self.c = np.asarray(c, dtype=float)
        self.delta = len(self.c)
        self.box = box
        self.lex_tiebreak = lex_tiebreak

    @classmethod
    def from_lp(cls, lp: LinearProgram, box: float | None = DEFAULT_BOX, **kw) -> "LPProblem":
        return cls(lp.c, box=lp.box if lp.box is not None else box, **kw)

    def _compute_value(self, members: tuple) -> Value:
        for h in members:
            if h.d != self.delta:
                raise DimensionMismatch(f"constraint of dimension {h.d} in a {self.delta}-dimensional LP")
        A = np.array([h.a for h in members], dtype=float).reshape(-1, self.delta)
        b = np.array([h.b for h in members], dtype=float)
        val = lexmin(A, b, self.c, self.box, self.tol)
        if not self.lex_tiebreak and val[0] == FINITE:
            return val[:2]
        return val

    def violates(self, basis: Basis, h: HalfSpace) -> bool:
        if not self.lex_tiebreak:
            return super().violates(basis, h)
        self.calls += 1
        if h in basis:
            return False
        val = self.value(basis)
        if val[0] != FINITE:
            return self.compare(self.value(basis + (h,)), val) > 0
        x = val[2:]
        s = 0.0
        mag = 0.0
        for ai, xi in zip(h.a, x):
            s += ai * xi
            mag += abs(ai * xi)
        return s > h.b + self.tol * (1.0 + abs(h.b) + mag)

    def basis_computation(self, basis: Basis, h: HalfSpace) -> Basis:
        if not self.lex_tiebreak:
            return super().basis_computation(basis, h)
        pool = distinct(basis + (h,))
        target = self.value(pool)
        if target[0] != FINITE:
            return super().basis_computation(basis, h)
        self.calls += 1
        x = target[2:]
        tight = [g for g in pool if abs(g.slack(x)) <= self.tol * (1.0 + abs(g.b) + sum(abs(a * v) for a, v in zip(g.a, x)))]
        if not tight or self.compare(self.value(tight), target) != 0:
            return super().basis_computation(basis, h)
        # constraints slack at the optimum never belong to a minimal basis;
        # greedy deletion over the tight ones in sorted order
        keep = list(tight)
        for g in tight:
            if len(keep) == 1:
                break
            trial = [k for k in keep if k != g]
            if self.compare(self.value(trial), target) == 0:
                keep = trial
        return make_basis(keep, self.delta)


# -- generators --------------------------------------------------------------

def _gaussian_rows(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((n, d))
    while True:
        bad = np.linalg.norm(A, axis=1) < 1e-12
        if not bad.any():
            return A
        A[bad] = rng.standard_normal((int(bad.sum()), d))


def gen_model_a(n: int, d: int, rng: np.random.Generator) -> LinearProgram:
    """Gaussian normals and cost; every hyperplane at unit distance from the origin."""
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    A = _gaussian_rows(n, d, rng)
    c = rng.standard_normal(d)
    b = np.sqrt((A**2).sum(axis=1))
    rows = tuple(HalfSpace(tuple(map(float, a)), float(bi)) for a, bi in zip(A, b))
    return LinearProgram(tuple(map(float, c)), rows)


def gen_model_b(n: int, d: int, rng: np.random.Generator) -> LinearProgram:
    """Gaussian ``A``; ``b`` and ``c_hat`` uniform on [0,1]; ``c = A^T c_hat``."""
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    A = _gaussian_rows(n, d, rng)
    bc = rng.random(2 * n)
    b, c_hat = bc[:n], bc[n:]
    c = A.T @ c_hat
    rows = tuple(HalfSpace(tuple(map(float, a)), float(bi)) for a, bi in zip(A, b))
    return LinearProgram(tuple(map(float, c)), rows)


GENERATORS = {"A": gen_model_a, "B": gen_model_b}


# -- independent oracles -------------------------------------------------------

def lexmin_vertex_enumeration(A, b, c, box: float | None = None, tol: float = 1e-9) -> Value:
    """Vectorized numpy vertex enumeration; independent of the compiled kernel."""
    import itertools

    A = np.asarray(A, dtype=float).reshape(-1, len(c))
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    d = len(c)
    BA, Bb = _box_rows(d, PROBE_BOX if box is None else box)
    A = np.vstack([A, BA])
    b = np.concatenate([b, Bb])
    combos = np.array(list(itertools.combinations(range(len(b)), d)))
    M = A[combos]
    rhs = b[combos]
    ok = np.abs(np.linalg.det(M)) > 1e-10
    X = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    slack = b[None, :] - X @ A.T
    scale = 1.0 + np.abs(b)[None, :] + np.abs(X[:, None, :] * A[None, :, :]).sum(axis=2)
    X = X[(slack >= -tol * scale).all(axis=1)]
    if len(X) == 0:
        return POS_INF
    keys = np.column_stack([X @ c, X])
    cand = np.arange(len(X))
    for j in range(d + 1):
        col = keys[cand, j]
        lo = col.min()
        cand = cand[col <= lo + tol * max(1.0, abs(lo))]
    x = X[cand[0]]
    if box is None and np.max(np.abs(x)) >= PROBE_BOX * (1 - 1e-6):
        return NEG_INF
    return (FINITE, float(c @ x)) + tuple(float(v) for v in x)


def lexmin_linprog(A, b, c, box: float | None = None) -> Value:
    """Sequential lexicographic minimization with scipy's HiGHS solver."""
    from scipy.optimize import linprog

    A = np.asarray(A, dtype=float).reshape(-1, len(c))
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    d = len(c)
    bounds = [(-box, box)] * d if box is not None else [(None, None)] * d
    A_ub, b_ub = A.copy(), b.copy()
    objectives = [c] + [np.eye(d)[j] for j in range(d)]
    x = cost = None
    for obj in objectives:
        res = linprog(obj, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status == 2 and x is not None:
            break  # a tie-break stage of a feasible problem: numerical, keep x
        if res.status == 2:
            return POS_INF
        if res.status == 3:
            return NEG_INF
        if res.status != 0:
            raise RuntimeError(res.message)
        x = res.x
        level = float(obj @ x)
        if cost is None:
            cost = level  # later stages only choose among near-optimal points
        A_ub = np.vstack([A_ub, obj])
        # slack at the HiGHS feasibility tolerance, so a level that is only
        # 1e-7 accurate cannot make the next stage infeasible
        b_ub = np.append(b_ub, level + 1e-7 * max(1.0, abs(level)))
    return (FINITE, cost) + tuple(float(v) for v in x)


def lp_problem_and_constraints(lp: LinearProgram, box: float | None = DEFAULT_BOX, **kw):
    """Convenience: the abstract problem and its constraint list."""
    return LPProblem.from_lp(lp, box=box, **kw), list(lp.constraints)



def degenerate_instance() -> LinearProgram:
    """Three planar constraints where ordering values by cost alone breaks locality.

    With ``c = (1, 0)``: ``F = {x1 >= 0}`` and ``G = F + {x2 >= 1}`` share the
    optimal cost 0, ``h: x2 - x1 <= 0.5`` raises the cost of ``G`` to 0.5 but
    leaves ``F`` at 0.
    """
    return LinearProgram(
        (1.0, 0.0),
        [HalfSpace((-1.0, 0.0), 0.0), HalfSpace((0.0, -1.0), -1.0), HalfSpace((-1.0, 1.0), 0.5)],
    )

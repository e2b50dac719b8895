"""Abstract optimization (LP-type) framework.

A problem is a finite set of hashable, orderable constraints together with a
value function on small constraint collections.  Values are plain tuples
``(kind, c0, c1, ...)`` where ``kind`` is ``UNBOUNDED`` (-1), ``FINITE`` (0)
or ``INFEASIBLE`` (1); finite values are ordered lexicographically on the
remaining components with a relative tolerance.

Bases are tuples of exactly ``delta`` constraints: the distinct members in
sorted order, padded by repeating the last one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .errors import CombinatorialDimensionExceeded, InfeasibleBase, RecursionBudgetExceeded, TooLarge

UNBOUNDED = -1
FINITE = 0
INFEASIBLE = 1

NEG_INF = (UNBOUNDED,)
POS_INF = (INFEASIBLE,)

DEFAULT_TOL = 1e-9
DEFAULT_BUDGET = 10**7

Constraint = Hashable
Value = tuple
Basis = tuple


def compare_values(u: Value, v: Value, tol: float = DEFAULT_TOL) -> int:
    """Three-way comparison of two values; returns -1, 0 or 1."""
    if u[0] != v[0]:
        return -1 if u[0] < v[0] else 1
    if u[0] != FINITE:
        return 0
    for a, b in zip(u[1:], v[1:]):
        scale = max(1.0, abs(a), abs(b))
        if abs(a - b) > tol * scale:
            return -1 if a < b else 1
    return 0


def distinct(constraints: Iterable[Constraint]) -> tuple:
    return tuple(sorted(set(constraints)))


def make_basis(constraints: Iterable[Constraint], delta: int) -> Basis:
    """Canonical padded basis from a nonempty collection of at most ``delta`` distinct constraints."""
    members = distinct(constraints)
    if not members:
        raise ValueError("a basis needs at least one constraint")
    if len(members) > delta:
        raise ValueError(f"{len(members)} distinct constraints exceed delta={delta}")
    return members + (members[-1],) * (delta - len(members))


class AbstractProblem:
    """Base class for LP-type problems.

    Subclasses define ``delta`` and ``_compute_value`` for small constraint
    collections.  The two primitives have generic implementations in terms of
    the value function; concrete problems override them where a direct
    geometric test is cheaper.
    """

    delta: int = 1
    tol: float = DEFAULT_TOL
    # True when _compute_value is correct for collections of any size, so
    # oracles need not rely on delta being a valid combinatorial dimension
    exact_value: bool = False

    def __init__(self) -> None:
        self._values: dict[frozenset, Value] = {}
        self.calls = 0

    # -- value -----------------------------------------------------------
    def _compute_value(self, members: tuple) -> Value:
        raise NotImplementedError

    def value(self, constraints: Iterable[Constraint]) -> Value:
        key = frozenset(constraints)
        try:
            return self._values[key]
        except KeyError:
            pass
        val = self._compute_value(tuple(sorted(key)))
        self._values[key] = val
        return val

    def compare(self, u: Value, v: Value) -> int:
        return compare_values(u, v, self.tol)

    def is_finite(self, v: Value) -> bool:
        return v[0] == FINITE

    # -- primitives ------------------------------------------------------
    def violates(self, basis: Basis, h: Constraint) -> bool:
        self.calls += 1
        if h in basis:
            return False
        return self.compare(self.value(basis + (h,)), self.value(basis)) > 0

    def basis_computation(self, basis: Basis, h: Constraint) -> Basis:
        """Minimal subset of ``basis + (h,)`` with the same value, padded."""
        self.calls += 1
        pool = distinct(basis + (h,))
        target = self.value(pool)
        for k in range(1, self.delta + 1):
            for sub in itertools.combinations(pool, k):
                if self.compare(self.value(sub), target) == 0:
                    return make_basis(sub, self.delta)
        raise CombinatorialDimensionExceeded(
            f"no subset of size <= {self.delta} of {pool!r} attains its value"
        )


def greedy_basis(problem: AbstractProblem, pool: Sequence[Constraint], target: Value) -> Basis:
    """Drop members of ``pool`` one at a time (sorted order) while the value stays ``target``.

    The result is a minimal set with the target value, hence a basis by
    monotonicity.
    """
    keep = list(distinct(pool))
    for g in list(keep):
        if len(keep) == 1:
            break
        trial = [k for k in keep if k != g]
        if problem.compare(problem.value(trial), target) == 0:
            keep = trial
    if len(keep) > problem.delta:
        raise CombinatorialDimensionExceeded(
            f"minimal subset of size {len(keep)} exceeds delta={problem.delta}: {tuple(keep)!r}"
        )
    return make_basis(keep, problem.delta)


def subex_lp(
    problem: AbstractProblem,
    constraints: Iterable[Constraint],
    start: Basis,
    rng: np.random.Generator,
    budget: int = DEFAULT_BUDGET,
) -> Basis:
    """Randomized recursive solver driven by the violation and basis primitives.

    Returns a basis of ``constraints`` starting from the candidate basis
    ``start`` (which must be contained in ``constraints``).  The recursion is
    run on an explicit stack; ``budget`` caps the number of primitive calls.
    """
    pool = distinct(constraints)
    start = make_basis(start, problem.delta)
    index = {c: k for k, c in enumerate(pool)}
    if not all(c in index for c in start):
        raise ValueError("initial basis must be a subset of the constraint set")
    v0 = problem.value(start)
    if v0[0] == INFEASIBLE:
        raise InfeasibleBase(f"initial basis {start!r} is infeasible")

    calls = 0
    # the recursion runs on constraint indices; frame: [G, C, h] with h None
    # until the first recursive call was issued
    stack: list[list[Any]] = [[tuple(range(len(pool))), start, None]]
    result: Basis | None = None
    while stack:
        frame = stack[-1]
        G, C, h = frame
        if h is None:
            in_c = {index[c] for c in C}
            if len(G) == len(in_c):
                result = C
                stack.pop()
                continue
            rest = [g for g in G if g not in in_c]
            h = rest[int(rng.integers(len(rest)))]
            frame[2] = h
            stack.append([tuple(g for g in G if g != h), C, None])
            continue
        B = result
        calls += 1
        if problem.violates(B, pool[h]):
            calls += 1
            # tail call on the full set with the improved candidate
            stack[-1] = [G, problem.basis_computation(B, pool[h]), None]
        else:
            stack.pop()
        if calls > budget:
            raise RecursionBudgetExceeded(f"more than {budget} primitive calls")
    assert result is not None
    return result


# -- brute-force oracles ----------------------------------------------------

BRUTE_FORCE_LIMIT = 25


def set_value(problem: AbstractProblem, constraints: Iterable[Constraint]) -> Value:
    """Value of an arbitrary constraint collection by exhaustive subset search.

    Uses only the combinatorial dimension: the value of a set equals the
    largest value among its subsets of size at most ``delta``.
    """
    pool = distinct(constraints)
    if len(pool) <= problem.delta or problem.exact_value:
        return problem.value(pool)
    best: Value | None = None
    for k in range(1, problem.delta + 1):
        for sub in itertools.combinations(pool, k):
            v = problem.value(sub)
            if best is None or problem.compare(v, best) > 0:
                best = v
    assert best is not None
    return best


def brute_force_basis(problem: AbstractProblem, constraints: Iterable[Constraint]) -> Basis:
    """Minimum-cardinality subset attaining the set value, first in sorted order."""
    pool = distinct(constraints)
    if len(pool) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{len(pool)} constraints exceed the brute-force limit {BRUTE_FORCE_LIMIT}")
    if not pool:
        raise ValueError("empty constraint set")
    target = set_value(problem, pool)
    for k in range(1, problem.delta + 1):
        for sub in itertools.combinations(pool, k):
            if problem.compare(problem.value(sub), target) == 0:
                return make_basis(sub, problem.delta)
    raise CombinatorialDimensionExceeded(
        f"no subset of size <= {problem.delta} attains the value of {len(pool)} constraints"
    )


# -- axiom and persistency checkers ----------------------------------------

@dataclass
class AxiomReport:
    trials: int = 0
    monotonicity_failures: int = 0
    locality_failures: int = 0
    closure_failures: int = 0
    primitive_failures: int = 0
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (
            self.monotonicity_failures
            or self.locality_failures
            or self.closure_failures
            or self.primitive_failures
        )

    def _fail(self, kind: str, **witness) -> None:
        setattr(self, f"{kind}_failures", getattr(self, f"{kind}_failures") + 1)
        if len(self.witnesses) < 20:
            self.witnesses.append({"axiom": kind, **witness})


def _random_subset(pool: Sequence, rng: np.random.Generator, min_size: int = 0) -> tuple:
    mask = rng.random(len(pool)) < rng.random()
    sub = [c for c, keep in zip(pool, mask) if keep]
    while len(sub) < min_size:
        sub.append(pool[int(rng.integers(len(pool)))])
    return distinct(sub)


def check_axioms(
    problem: AbstractProblem,
    constraints: Iterable[Constraint],
    trials: int,
    rng: np.random.Generator,
) -> AxiomReport:
    """Sample nested pairs ``F <= G`` and constraints ``h`` and test the axioms.

    Checks monotonicity, locality, the union-closure equivalence
    ``phi(F | G) > phi(F)  <=>  exists g in G: phi(F | {g}) > phi(F)``, and the
    consistency of the two primitives with the value function.
    """
    pool = distinct(constraints)
    report = AxiomReport()
    gt = lambda a, b: problem.compare(a, b) > 0  # noqa: E731
    for _ in range(trials):
        report.trials += 1
        G = _random_subset(pool, rng, min_size=1)
        if rng.random() < 0.5:
            # bias toward phi(F) == phi(G), where locality has teeth
            core = set(brute_force_basis(problem, G))
            F = distinct(core | set(_random_subset(G, rng)))
        else:
            F = _random_subset(G, rng, min_size=1)
        h = pool[int(rng.integers(len(pool)))]
        vF, vG = set_value(problem, F), set_value(problem, G)
        if gt(vF, vG):
            report._fail("monotonicity", F=F, G=G)
        vFh, vGh = set_value(problem, F + (h,)), set_value(problem, G + (h,))
        if vF[0] == FINITE and problem.compare(vF, vG) == 0 and gt(vGh, vG) and not gt(vFh, vF):
            report._fail("locality", F=F, G=G, h=h)
        # union closure with an independent second set
        G2 = _random_subset(pool, rng, min_size=1)
        lhs = gt(set_value(problem, F + G2), vF)
        rhs = any(gt(set_value(problem, F + (g,)), vF) for g in G2)
        if lhs != rhs:
            report._fail("closure", F=F, G=G2)
        # primitives against the value function
        if vF[0] == FINITE:
            B = brute_force_basis(problem, F)
            viol = problem.violates(B, h)
            B2 = problem.basis_computation(B, h)
            grew = gt(problem.value(B2), problem.value(B))
            if viol != grew or gt(problem.value(B), problem.value(B2)):
                report._fail("primitive", B=B, h=h)
            if problem.compare(problem.value(B2), set_value(problem, B + (h,))) != 0:
                report._fail("primitive", B=B, h=h)
    return report


PERSISTENCY_LIMIT = 12


def persistency_check(problem: AbstractProblem, constraints: Iterable[Constraint]):
    """Return ``(True, None)`` if every element of the global basis stays basic
    in every subset containing it, else ``(False, (h, G))``."""
    pool = distinct(constraints)
    if len(pool) > PERSISTENCY_LIMIT:
        raise TooLarge(f"{len(pool)} constraints exceed the persistency limit {PERSISTENCY_LIMIT}")
    global_basis = set(brute_force_basis(problem, pool))
    for h in sorted(global_basis):
        others = [c for c in pool if c != h]
        for k in range(0, len(others) + 1):
            for rest in itertools.combinations(others, k):
                G = distinct(rest + (h,))
                if set_value(problem, G)[0] != FINITE:
                    continue
                if h not in brute_force_basis(problem, G):
                    return False, (h, G)
    return True, None

"""Constraints consensus over synchronous networks.

Three variants share one round loop:

* nominal: every round node ``i`` solves the abstract program over its own
  constraint, its candidate basis and the bases received from in-neighbors;
* multi-round: each solver call takes ``latency`` rounds, its inputs frozen
  at the start, while the node keeps broadcasting its last completed basis;
* cycling: on a static graph, node ``i`` listens to one group of at most
  ``memory_bound`` in-neighbors per round, cycling through the groups.

Rounds are numbered from 1; round 0 is the initial state.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import AbstractProblem, Value, brute_force_basis, make_basis, subex_lp, BRUTE_FORCE_LIMIT
from .errors import (
    InvariantViolation,
    NotBijective,
    NotJointlyConnected,
    TimeVaryingNotSupported,
)
from .network import STATIC, TimeVaryingDigraph, diameter, is_jointly_strongly_connected

NOMINAL = "nominal"
MULTI_ROUND = "multi_round"
CYCLING = "cycling"
VARIANTS = (NOMINAL, MULTI_ROUND, CYCLING)

HALT_NONE = "none"
HALT_DIAMETER = "diameter"
HALT_FIXED = "fixed"


@dataclass
class RunOptions:
    variant: str = NOMINAL
    max_rounds: int | None = None  # default: 20 n + 50
    halting: str = HALT_NONE
    halt_after: int | None = None  # rounds for HALT_FIXED; diameter for HALT_DIAMETER (computed if None)
    latency: int = 1
    memory_bound: int = 1
    seed: int = 0
    reexamine: bool = True  # debug switch: False never re-adds the own constraint
    record: bool = True
    check_monotone: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.halting not in (HALT_NONE, HALT_DIAMETER, HALT_FIXED):
            raise ValueError(f"unknown halting rule {self.halting!r}")
        if self.latency < 1 or self.memory_bound < 1:
            raise ValueError("latency and memory_bound must be >= 1")


def halting_threshold(diam: int) -> int:
    """Unchanged rounds after which a node may halt on a static graph."""
    return 2 * int(diam) + 1


@dataclass
class NodeState:
    node: int
    constraint: object
    basis: tuple
    value: Value
    halted: bool = False
    unchanged_rounds: int = 0
    memory_high_water: int = 0
    # multi-round bookkeeping: (round at which the result lands, result basis)
    pending: tuple | None = None

    def halting_monitor(self, threshold: int) -> bool:
        if not self.halted and self.unchanged_rounds >= threshold:
            self.halted = True
        return self.halted


@dataclass
class ConsensusTrace:
    n: int
    delta: int
    variant: str
    rounds_run: int
    completion_round: int | None  # None means not converged
    oracle_value: Value
    final_bases: list
    final_values: list
    halt_rounds: list
    messages_sent: int
    memory_high_water: list
    memory_bound: list
    values: list | None = None  # values[t][i] for t = 0..rounds_run
    solver_calls: int = 0

    @property
    def converged(self) -> bool:
        return self.completion_round is not None

    def summary(self) -> dict:
        return {
            "n": self.n,
            "delta": self.delta,
            "variant": self.variant,
            "rounds_run": self.rounds_run,
            "completion_round": self.completion_round,
            "converged": self.converged,
            "oracle_value": list(self.oracle_value),
            "halt_rounds": self.halt_rounds,
            "messages_sent": self.messages_sent,
            "memory_high_water": self.memory_high_water,
            "memory_bound": self.memory_bound,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)

    def write_csv(self, path) -> None:
        if self.values is None:
            raise ValueError("trace was recorded without per-round values")
        width = max(len(v) for row in self.values for v in row)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "node"] + [f"v{k}" for k in range(width)] + ["halted"])
            for t, row in enumerate(self.values):
                for i, v in enumerate(row):
                    halted = self.halt_rounds[i] is not None and self.halt_rounds[i] <= t
                    w.writerow([t, i] + list(v) + [""] * (width - len(v)) + [int(halted)])


def global_value(problem: AbstractProblem, constraints: Sequence, rng: np.random.Generator | None = None) -> Value:
    """Centralized value of the whole constraint set: brute force when small, else SUBEX."""
    pool = list(constraints)
    if len(set(pool)) <= BRUTE_FORCE_LIMIT:
        return problem.value(brute_force_basis(problem, pool))
    rng = np.random.default_rng(0) if rng is None else rng
    start = make_basis([min(pool)], problem.delta)
    return problem.value(subex_lp(problem, pool, start, rng))


def _solve(problem: AbstractProblem, pool: list, basis: tuple, rng: np.random.Generator) -> tuple:
    # SUBEX returns the candidate itself when nothing in the pool violates it,
    # so that case is answered with one pass of violation tests
    if all(not problem.violates(basis, h) for h in set(pool)):
        return basis
    return subex_lp(problem, pool, basis, rng)


def _check_inputs(problem, graph: TimeVaryingDigraph, constraints: Sequence, opts: RunOptions) -> None:
    if len(constraints) != graph.n:
        raise NotBijective(f"{len(constraints)} constraints for {graph.n} nodes")
    if len(set(constraints)) != len(constraints):
        raise NotBijective("two nodes hold the same constraint")
    if graph.n > 1 and not is_jointly_strongly_connected(graph):
        raise NotJointlyConnected("the union graph is not strongly connected")
    if opts.variant == CYCLING and graph.kind != STATIC:
        raise TimeVaryingNotSupported("cycling constraints consensus needs a static graph")
    if opts.halting == HALT_DIAMETER and graph.kind != STATIC:
        raise TimeVaryingNotSupported("the diameter halting rule needs a static graph")


def _memory_bounds(problem, graph: TimeVaryingDigraph, opts: RunOptions) -> list[int]:
    d = problem.delta
    if opts.variant == CYCLING:
        return [1 + d * (1 + opts.memory_bound)] * graph.n
    indeg = [max(len(graph.in_neighbors(i, t)) for t in range(graph.period)) for i in range(graph.n)]
    return [1 + d * (1 + k) for k in indeg]


def run_constraints_consensus(
    problem: AbstractProblem,
    graph: TimeVaryingDigraph,
    constraints: Sequence,
    opts: RunOptions | None = None,
    oracle_value: Value | None = None,
) -> ConsensusTrace:
    """Simulate constraints consensus; node ``i`` owns ``constraints[i]``.

    Stops at completion (every node at the global value) when no halting
    rule is set, otherwise once every node has halted; ``max_rounds`` caps
    both.  Per-node value monotonicity is checked every round.
    """
    opts = RunOptions() if opts is None else opts
    _check_inputs(problem, graph, constraints, opts)
    n, delta = graph.n, problem.delta
    rng = np.random.default_rng(opts.seed)
    if oracle_value is None:
        oracle_value = global_value(problem, constraints, np.random.default_rng([opts.seed, 1]))
    max_rounds = opts.max_rounds if opts.max_rounds is not None else 20 * n + 50

    threshold = None
    if opts.halting == HALT_DIAMETER:
        diam = opts.halt_after if opts.halt_after is not None else diameter(graph)
        threshold = halting_threshold(diam)
    elif opts.halting == HALT_FIXED:
        if opts.halt_after is None:
            raise ValueError("fixed halting needs halt_after")
        threshold = int(opts.halt_after)

    nodes = []
    for i, h in enumerate(constraints):
        B = make_basis([h], delta)
        nodes.append(NodeState(i, h, B, problem.value(B)))
    groups = None
    if opts.variant == CYCLING:
        D = opts.memory_bound
        groups = []
        for i in range(n):
            nb = graph.in_neighbors(i)
            groups.append([nb[k:k + D] for k in range(0, len(nb), D)] or [()])

    def complete() -> bool:
        return all(problem.compare(s.value, oracle_value) == 0 for s in nodes)

    values = [[s.value for s in nodes]] if opts.record else None
    completion = 0 if complete() else None
    messages = 0
    halt_rounds: list = [None] * n
    calls0 = problem.calls
    t = 0
    while t < max_rounds:
        if threshold is None and completion is not None:
            break
        if threshold is not None and all(s.halted for s in nodes):
            break
        t += 1
        outbox = [None if s.halted else s.basis for s in nodes]
        messages += sum(1 for i, y in enumerate(outbox) if y is not None for _ in graph.out_neighbors(i, t))
        new_bases = [s.basis for s in nodes]
        for s in nodes:
            if s.halted:
                continue
            i = s.node
            if opts.variant == MULTI_ROUND and s.pending is not None:
                if s.pending[0] == t:
                    new_bases[i] = s.pending[1]
                    s.pending = None
                continue
            if opts.variant == CYCLING:
                g = groups[i]
                senders = g[(t - 1) % len(g)]
            else:
                senders = graph.in_neighbors(i, t)
            pool = list(s.basis)
            if opts.reexamine:
                pool.append(s.constraint)
            for j in senders:
                if outbox[j] is not None:
                    pool.extend(outbox[j])
            s.memory_high_water = max(s.memory_high_water, len(pool))
            result = _solve(problem, pool, s.basis, rng)
            if opts.variant == MULTI_ROUND and opts.latency > 1:
                s.pending = (t + opts.latency - 1, result)
            else:
                new_bases[i] = result
        for s in nodes:
            if s.halted:
                continue
            B = new_bases[s.node]
            v = problem.value(B)
            cmp = problem.compare(v, s.value)
            if cmp < 0 and opts.check_monotone:
                raise InvariantViolation(f"node {s.node} value decreased at round {t}: {s.value} -> {v}")
            s.unchanged_rounds = s.unchanged_rounds + 1 if cmp == 0 else 0
            s.basis, s.value = B, v
            if threshold is not None and s.halting_monitor(threshold):
                halt_rounds[s.node] = t
        if values is not None:
            values.append([s.value for s in nodes])
        if completion is None and complete():
            completion = t

    return ConsensusTrace(
        n=n,
        delta=delta,
        variant=opts.variant,
        rounds_run=t,
        completion_round=completion,
        oracle_value=oracle_value,
        final_bases=[s.basis for s in nodes],
        final_values=[s.value for s in nodes],
        halt_rounds=halt_rounds,
        messages_sent=messages,
        memory_high_water=[s.memory_high_water for s in nodes],
        memory_bound=_memory_bounds(problem, graph, opts),
        values=values,
        solver_calls=problem.calls - calls0,
    )


def run_multi_round(problem, graph, constraints, opts: RunOptions | None = None, **kw) -> ConsensusTrace:
    opts = RunOptions(variant=MULTI_ROUND) if opts is None else opts
    if opts.variant != MULTI_ROUND:
        opts = RunOptions(**{**asdict(opts), "variant": MULTI_ROUND})
    return run_constraints_consensus(problem, graph, constraints, opts, **kw)


def run_cycling(problem, graph, constraints, opts: RunOptions | None = None, **kw) -> ConsensusTrace:
    opts = RunOptions(variant=CYCLING) if opts is None else opts
    if opts.variant != CYCLING:
        opts = RunOptions(**{**asdict(opts), "variant": CYCLING})
    return run_constraints_consensus(problem, graph, constraints, opts, **kw)


def memory_accounting(trace: ConsensusTrace) -> list[tuple[int, int]]:
    """Per-node ``(high water, bound)``; raises if any node exceeded its bound."""
    out = list(zip(trace.memory_high_water, trace.memory_bound))
    for i, (used, bound) in enumerate(out):
        if used > bound:
            raise InvariantViolation(f"node {i} stored {used} constraints, bound {bound}")
    return out


def values_monotone(trace: ConsensusTrace, compare) -> bool:
    rows = trace.values or []
    return all(
        compare(rows[t][i], rows[t - 1][i]) >= 0 for t in range(1, len(rows)) for i in range(trace.n)
    )


def frozen_after_first_halt(trace: ConsensusTrace, compare) -> bool:
    """No node's value changes in any round after the first node halted."""
    halted = [r for r in trace.halt_rounds if r is not None]
    if not halted or trace.values is None:
        return True
    first = min(halted)
    rows = trace.values
    return all(
        compare(rows[t][i], rows[first][i]) == 0 for t in range(first, len(rows)) for i in range(trace.n)
    )

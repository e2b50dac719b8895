import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from constraints_consensus.consensus import (
    CYCLING,
    HALT_DIAMETER,
    MULTI_ROUND,
    RunOptions,
    frozen_after_first_halt,
    global_value,
    halting_threshold,
    memory_accounting,
    run_constraints_consensus,
    run_cycling,
    run_multi_round,
    values_monotone,
)
from constraints_consensus.core import brute_force_basis, persistency_check, set_value
from constraints_consensus.errors import NotBijective, NotJointlyConnected, TimeVaryingNotSupported
from constraints_consensus.geometry import AnnulusProblem, BallProblem, random_points
from constraints_consensus.lp import HalfSpace, LinearProgram, LPProblem, gen_model_a, gen_model_b, lp_problem_and_constraints
from constraints_consensus.network import (
    TimeVaryingDigraph,
    diameter,
    gen_complete,
    gen_directed_cycle,
    gen_erdos_renyi,
    gen_line,
)


def instance(model, n, d, seed):
    gen = gen_model_a if model == "A" else gen_model_b
    return lp_problem_and_constraints(gen(n, d, np.random.default_rng(seed)))


def all_at(problem, trace, value):
    return all(problem.compare(v, value) == 0 for v in trace.final_values)


def unique_basis(problem, H):
    target = set_value(problem, H)
    B = brute_force_basis(problem, H)
    k = len(set(B))
    hits = [s for s in itertools.combinations(sorted(set(H)), k) if problem.compare(problem.value(s), target) == 0]
    return set(B) if len(hits) == 1 else None


def test_single_node():
    prob = BallProblem()
    trace = run_constraints_consensus(prob, TimeVaryingDigraph.static(1, []), [(0.5, 0.5)])
    assert trace.completion_round == 0
    assert trace.final_bases[0] == ((0.5, 0.5),) * 3


def test_line_model_a_matches_oracle():
    prob, H = instance("A", 10, 2, 0)
    trace = run_constraints_consensus(prob, gen_line(10), H, RunOptions(seed=1))
    assert trace.converged
    assert all_at(prob, trace, prob.value(brute_force_basis(prob, H)))
    assert values_monotone(trace, prob.compare)


def test_decisive_constraint_at_end_of_line():
    n = 12
    # x1 >= 0 at node 0 dominates the weaker lower bounds held elsewhere
    H = [HalfSpace((-1.0, 0.0), 0.0)] + [HalfSpace((-1.0, 0.0), float(k)) for k in range(1, n)]
    prob = LPProblem((1.0, 0.0))
    trace = run_constraints_consensus(prob, gen_line(n), H, RunOptions(seed=0))
    assert trace.completion_round >= n - 1
    assert trace.completion_round <= n ** (prob.delta + 1)


def test_input_errors():
    prob, H = instance("A", 5, 2, 0)
    with pytest.raises(NotBijective):
        run_constraints_consensus(prob, gen_line(4), H)
    with pytest.raises(NotBijective):
        run_constraints_consensus(prob, gen_line(5), H[:4] + H[:1])
    with pytest.raises(NotJointlyConnected):
        run_constraints_consensus(prob, TimeVaryingDigraph.undirected(5, [(0, 1), (2, 3), (3, 4)]), H)
    periodic = TimeVaryingDigraph.periodic(5, [gen_line(5).edges_at(0), gen_complete(5).edges_at(0)])
    with pytest.raises(TimeVaryingNotSupported):
        run_cycling(prob, periodic, H)


def test_time_varying_graph():
    prob, H = instance("B", 6, 2, 3)
    ring = [(i, (i + 1) % 6) for i in range(6)]
    g = TimeVaryingDigraph.periodic(6, [ring[:3], ring[3:]])
    trace = run_constraints_consensus(prob, g, H, RunOptions(seed=0))
    assert trace.converged and all_at(prob, trace, global_value(prob, H))


def test_halting_thresholds():
    assert halting_threshold(diameter(gen_complete(5))) == 3
    assert halting_threshold(diameter(gen_line(10))) == 19


def test_halting_complete_graph_literal():
    prob, H = instance("A", 5, 2, 4)
    trace = run_constraints_consensus(prob, gen_complete(5), H, RunOptions(seed=0, halting=HALT_DIAMETER))
    values = trace.values
    for i, r in enumerate(trace.halt_rounds):
        # the last change happened exactly three rounds before halting
        assert all(prob.compare(values[t][i], values[r][i]) == 0 for t in range(r - 3, r + 1))
        assert r - 4 < 0 or prob.compare(values[r - 4][i], values[r][i]) != 0


def test_halting_safety_sweep():
    rng = np.random.default_rng(5)
    for run in range(100):
        n = int(rng.integers(3, 10))
        prob, H = instance("AB"[run % 2], n, 2, run)
        g = gen_line(n) if run % 3 else gen_erdos_renyi(n, 0.3, rng)
        trace = run_constraints_consensus(prob, g, H, RunOptions(seed=run, halting=HALT_DIAMETER))
        assert all(r is not None for r in trace.halt_rounds)
        assert frozen_after_first_halt(trace, prob.compare)
        assert all_at(prob, trace, global_value(prob, H))


def test_multi_round_latency_one_is_nominal():
    prob, H = instance("A", 8, 3, 2)
    a = run_constraints_consensus(prob, gen_line(8), H, RunOptions(seed=3))
    b = run_multi_round(prob, gen_line(8), H, RunOptions(seed=3, latency=1))
    assert a.values == b.values and a.final_bases == b.final_bases


@pytest.mark.parametrize("latency", [3, 5])
def test_multi_round_converges(latency):
    prob, H = instance("B", 8, 2, 6)
    trace = run_multi_round(prob, gen_line(8), H, RunOptions(seed=0, latency=latency, max_rounds=40 * 8))
    assert trace.converged and all_at(prob, trace, global_value(prob, H))
    assert values_monotone(trace, prob.compare)


def test_cycling_wide_memory_is_nominal():
    prob, H = instance("A", 9, 2, 1)
    g = gen_erdos_renyi(9, 0.3, np.random.default_rng(1))
    a = run_constraints_consensus(prob, g, H, RunOptions(seed=2))
    b = run_cycling(prob, g, H, RunOptions(seed=2, memory_bound=g.max_in_degree()))
    assert a.values == b.values


def test_cycling_memory_one():
    prob, H = instance("A", 10, 3, 8)
    trace = run_cycling(prob, gen_line(10), H, RunOptions(seed=0, memory_bound=1))
    assert trace.converged and all_at(prob, trace, global_value(prob, H))
    assert all(used <= 1 + 3 * 2 for used, _ in memory_accounting(trace))


def test_memory_bound_formula():
    prob, H = instance("A", 3, 3, 0)
    trace = run_constraints_consensus(prob, gen_line(3), H)
    assert trace.memory_bound[1] == 1 + 3 * 3  # middle node, in-degree 2
    assert trace.memory_high_water[1] <= trace.memory_bound[1]
    cyc = run_cycling(prob, gen_line(3), H, RunOptions(memory_bound=1))
    assert cyc.memory_bound == [7, 7, 7]


def test_reexamination_needed():
    """Without re-adding its own constraint a node can settle on a wrong value."""
    rng = np.random.default_rng(0)
    for _ in range(500):
        A, b = rng.normal(size=(4, 2)), rng.random(4)
        prog = LinearProgram(tuple(rng.normal(size=2)), tuple(HalfSpace(tuple(a), float(x)) for a, x in zip(A, b)))
        prob, H = lp_problem_and_constraints(prog)
        if persistency_check(prob, H)[0]:
            continue
        ref = global_value(prob, H)
        for perm in itertools.permutations(range(4)):
            Hp = [H[k] for k in perm]
            for g in (gen_line(4), gen_directed_cycle(4)):
                bad = run_constraints_consensus(prob, g, Hp, RunOptions(reexamine=False, max_rounds=60), oracle_value=ref)
                if not all_at(prob, bad, ref):
                    good = run_constraints_consensus(prob, g, Hp, RunOptions(), oracle_value=ref)
                    assert good.converged and all_at(prob, good, ref)
                    return
    pytest.fail("no failing topology found")


def test_trace_exports(tmp_path):
    prob, H = instance("A", 5, 2, 0)
    trace = run_constraints_consensus(prob, gen_line(5), H)
    trace.write_json(tmp_path / "s.json")
    trace.write_csv(tmp_path / "t.csv")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["completion_round"] == trace.completion_round
    rows = (tmp_path / "t.csv").read_text().strip().splitlines()
    assert rows[0].startswith("round,node") and rows[0].endswith("halted")
    assert len(rows) == 1 + 5 * (trace.rounds_run + 1)


runs = st.tuples(
    st.sampled_from(["A", "B"]), st.integers(2, 3), st.integers(4, 14), st.integers(0, 2**31),
    st.sampled_from(["line", "er", "cycle"]),
)


@given(runs)
def test_nominal_correct_and_monotone(case):
    model, d, n, seed, kind = case
    prob, H = instance(model, n, d, seed)
    g = {"line": lambda: gen_line(n), "cycle": lambda: gen_directed_cycle(n),
         "er": lambda: gen_erdos_renyi(n, 0.3, np.random.default_rng(seed))}[kind]()
    trace = run_constraints_consensus(prob, g, H, RunOptions(seed=seed))
    ref = prob.value(brute_force_basis(prob, H))
    assert trace.converged and all_at(prob, trace, ref)
    assert values_monotone(trace, prob.compare)
    assert trace.completion_round <= n ** (d + 1)
    memory_accounting(trace)
    only = unique_basis(prob, H)
    if only is not None:
        assert all(set(B) == only for B in trace.final_bases)


@given(runs, st.sampled_from(["nominal", MULTI_ROUND, CYCLING]))
def test_deterministic(case, variant):
    model, d, n, seed, _ = case
    prob, H = instance(model, n, d, seed)
    opts = RunOptions(variant=variant, seed=seed, latency=2 if variant == MULTI_ROUND else 1)
    a = run_constraints_consensus(prob, gen_line(n), H, opts)
    b = run_constraints_consensus(prob, gen_line(n), H, opts)
    assert a.values == b.values and a.final_bases == b.final_bases


def test_geometric_problem_consensus():
    pts = random_points(8, np.random.default_rng(4))
    prob = AnnulusProblem()
    trace = run_constraints_consensus(prob, gen_line(8), pts, RunOptions(seed=0))
    assert all_at(prob, trace, prob.value(brute_force_basis(prob, pts)))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from constraints_consensus.errors import InitialGraphDisconnected, NotStripeGeneric, PNotInQ
from constraints_consensus.formation import (
    CIRCLE,
    LINE,
    POINT,
    CircleShape,
    Disk,
    FormationConfig,
    LineShape,
    PointShape,
    closest_point_on_shape,
    disk_graph,
    fti,
    motion_constraint_set,
    random_cluster,
    run_move_to_consensus_shape,
    target_set,
)
from constraints_consensus.geometry import BallProblem, seb_exhaustive
from constraints_consensus.network import gen_complete


def test_disk_graph_boundary():
    assert (0, 1) in disk_graph([(0.0, 0.0), (1.0, 0.0)], 1.0).edges_at(0)
    assert not disk_graph([(0.0, 0.0), (1.0 + 1e-9, 0.0)], 1.0).edges_at(0)
    pts = [(0.1 * k, 0.05 * k * k) for k in range(5)]
    assert disk_graph(pts, 1.0) == gen_complete(5)


def test_motion_set_examples():
    assert motion_constraint_set((0.0, 0.0), [], 1.0) == []
    region = motion_constraint_set((0.0, 0.0), [(1.0, 0.0)], 1.0)
    assert region[0].contains((0.0, 0.0), tol=1e-9)


@given(st.floats(0, 2 * math.pi), st.floats(0, 1), st.floats(0, 1), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_shared_disk_keeps_edge(phi, s1, s2, a1, a2):
    p, q = (0.0, 0.0), (math.cos(phi), math.sin(phi))
    disk = motion_constraint_set(p, [q], 1.0)[0]
    r = disk.radius
    m = disk.center
    p2 = (m[0] + s1 * r * math.cos(a1), m[1] + s1 * r * math.sin(a1))
    q2 = (m[0] + s2 * r * math.cos(a2), m[1] + s2 * r * math.sin(a2))
    assert math.dist(p2, q2) <= 1.0


def test_fti_examples():
    assert fti((0.0, 0.0), (0.5, 0.0), [Disk((0.0, 0.0), 1.0)]) == (0.5, 0.0)
    assert fti((0.0, 0.0), (2.0, 0.0), [Disk((0.0, 0.0), 1.0)]) == pytest.approx((1.0, 0.0))
    with pytest.raises(PNotInQ):
        fti((3.0, 0.0), (0.0, 0.0), [Disk((0.0, 0.0), 1.0)])


def test_fti_lens():
    region = [Disk((0.0, 0.0), 1.0), Disk((1.0, 0.0), 1.0)]
    x = fti((0.5, 0.0), (0.5, 5.0), region)
    assert all(d.contains(x) for d in region)
    ts = np.linspace(0, 1, 200001)
    seg = np.column_stack([np.full_like(ts, 0.5), 5.0 * ts])
    ok = (np.hypot(seg[:, 0], seg[:, 1]) <= 1) & (np.hypot(seg[:, 0] - 1, seg[:, 1]) <= 1)
    assert x[1] == pytest.approx(seg[ok][-1, 1], abs=5e-5)
    assert x[1] == pytest.approx(math.sqrt(0.75), abs=1e-12)


@given(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), st.tuples(st.floats(-3, 3), st.floats(-3, 3)))
def test_fti_stays_inside(q, p_off):
    region = [Disk((0.0, 0.0), 1.0), Disk((0.8, 0.3), 0.9)]
    p = (0.4, 0.1)
    x = fti(p, p_off, region)
    assert all(d.contains(x, 1e-12) for d in region)


def test_target_sets():
    assert target_set([(0.0, 0.0), (2.0, 0.0)], POINT) == PointShape((1.0, 0.0))
    circ = [(2 * math.cos(a), 2 * math.sin(a)) for a in (0.2, 1.9, 3.3, 5.0)]
    s = target_set(circ, CIRCLE)
    assert s.center == pytest.approx((0.0, 0.0), abs=1e-9) and s.radius == pytest.approx(2.0, abs=1e-9)
    line = target_set([(0.0, 0.0), (4.0, 0.0), (2.0, 1.0)], LINE)
    assert line.point[1] == pytest.approx(0.5) and abs(line.direction[0]) == pytest.approx(1.0)
    with pytest.raises(NotStripeGeneric):
        target_set([(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)], LINE)


def test_closest_points():
    assert closest_point_on_shape((5.0, 5.0), PointShape((1.0, 2.0))) == (1.0, 2.0)
    assert closest_point_on_shape((3.0, 4.0), LineShape((0.0, 0.0), (1.0, 0.0))) == pytest.approx((3.0, 0.0))
    assert closest_point_on_shape((6.0, 0.0), CircleShape((0.0, 0.0), 2.0)) == pytest.approx((2.0, 0.0))
    assert closest_point_on_shape((1.0, 1.0), CircleShape((1.0, 1.0), 2.0)) == (3.0, 1.0)


def test_two_robots_meet_at_midpoint():
    trace = run_move_to_consensus_shape(FormationConfig(POINT, r_cmm=1.0, r_ctr=0.05, positions=[[0.0, 0.0], [0.8, 0.3]]))
    assert np.allclose(trace.positions[-1], [[0.4, 0.15], [0.4, 0.15]], atol=1e-12)


def check_invariants(trace, cfg):
    n = len(trace.positions[0])
    for t in range(trace.rounds):
        P, Q = trace.positions[t], trace.positions[t + 1]
        assert np.all(np.linalg.norm(Q - P, axis=1) <= cfg.r_ctr + 1e-12)
        for i, j in disk_graph(P, cfg.r_cmm).edges_at(0):
            if not (trace.halted[t + 1][i] or trace.halted[t + 1][j]):
                assert math.dist(Q[i], Q[j]) <= cfg.r_cmm
    assert trace.motion_violations == trace.edge_violations == 0
    assert trace.consensus_round is not None
    first_halt = min(r for r in trace.halt_rounds if r is not None)
    assert trace.consensus_round < first_halt
    # halting after exactly 2n unchanged rounds
    for i, r in enumerate(trace.halt_rounds):
        vals = [v[i] for v in trace.values[: r + 1]]
        last_change = max([t for t in range(1, r + 1) if vals[t] != vals[t - 1]], default=0)
        assert r - last_change == 2 * n


def test_eight_robot_cluster_point():
    cfg = FormationConfig(POINT, r_cmm=1.0, r_ctr=0.01, n=8, seed=3)
    trace = run_move_to_consensus_shape(cfg)
    check_invariants(trace, cfg)
    center = seb_exhaustive([tuple(p) for p in trace.positions[0]])[2:]
    assert max(math.dist(p, center) for p in trace.positions[-1]) <= 10 * cfg.r_ctr
    assert trace.oracle_value == pytest.approx(BallProblem().value([tuple(p) for p in trace.positions[0]]))


@pytest.mark.parametrize("shape", [LINE, CIRCLE])
def test_other_shapes(shape):
    cfg = FormationConfig(shape, r_cmm=1.0, r_ctr=0.01, n=6, seed=1)
    trace = run_move_to_consensus_shape(cfg)
    check_invariants(trace, cfg)
    assert max(trace.final_distances()) <= 10 * cfg.r_ctr


def test_setup_errors():
    with pytest.raises(InitialGraphDisconnected):
        run_move_to_consensus_shape(FormationConfig(POINT, positions=[[0, 0], [5, 0]]))
    with pytest.raises(NotStripeGeneric):
        run_move_to_consensus_shape(FormationConfig(LINE, positions=[[0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        FormationConfig("square")


def test_random_cluster_connected(rng):
    pts = random_cluster(9, 1.0, rng)
    assert len(set(pts)) == 9


def test_trace_export(tmp_path):
    cfg = FormationConfig(POINT, n=4, seed=0, r_ctr=0.05)
    trace = run_move_to_consensus_shape(cfg)
    trace.write_csv(tmp_path / "t.csv")
    trace.write_json(tmp_path / "s.json")
    head = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert head[:5] == ["round", "robot", "x", "y", "halted"]

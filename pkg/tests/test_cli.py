import csv
import json
import math

import pytest

from constraints_consensus import cli


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


def test_solve_ball(tmp_path):
    cfg = write(tmp_path, "ball.json", {"problem": "ball", "points": [[1, 1], [-1, 1], [-1, -1], [1, -1]]})
    assert cli.main(["solve", "--config", cfg, "--seed", "1", "--out", str(tmp_path / "o"), "--oracle"]) == 0
    out = json.loads((tmp_path / "o" / "solve.json").read_text())
    assert out["shape"]["radius"] == pytest.approx(math.sqrt(2))
    assert out["oracle_match"] and out["primitive_call_count"] > 0
    assert len(out["basis"]) == 3


def test_solve_generated_lp(tmp_path):
    cfg = write(tmp_path, "lp.json", {"problem": "lp", "generate": {"model": "A", "n": 30, "d": 3}})
    assert cli.main(["solve", "--config", cfg, "--seed", "5", "--out", str(tmp_path), "--oracle"]) == 0
    out = json.loads((tmp_path / "solve.json").read_text())
    assert out["value"][0] == 0 and out["oracle_match"]


def test_malformed_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", "{not json")
    assert cli.main(["solve", "--config", cfg, "--seed", "1", "--out", str(tmp_path)]) == 1
    assert "bad.json" in capsys.readouterr().err


def test_missing_seed(tmp_path):
    cfg = write(tmp_path, "ball.json", {"problem": "ball", "points": [[0, 0]]})
    assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense"])
    assert exc.value.code == 1


def test_consensus_summary(tmp_path):
    cfg = write(tmp_path, "c.json", {"instance": {"problem": "lp", "generate": {"model": "A", "n": 10, "d": 2}},
                                     "graph": {"model": "line"}})
    assert cli.main(["consensus", "--config", cfg, "--seed", "2", "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "summary.json").read_text())
    assert out["oracle_match"] is True and out["completion_round"] is not None
    assert (tmp_path / "trace.csv").exists()


def test_consensus_deterministic(tmp_path):
    cfg = write(tmp_path, "c.json", {"instance": {"problem": "annulus", "generate": {"n": 7}},
                                     "graph": {"model": "erdos_renyi"}, "options": {"halting": "diameter"}})
    docs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert cli.main(["consensus", "--config", cfg, "--seed", "8", "--out", str(out)]) == 0
        docs.append((out / "summary.json").read_text())
    assert docs[0] == docs[1]


def test_montecarlo_lite(tmp_path):
    cfg = write(tmp_path, "m.json", {"graph_model": "line", "lp_model": "A", "d": 4, "n_list": [6, 10, 14], "runs": 3})
    assert cli.main(["montecarlo", "--config", cfg, "--seed", "0", "--out", str(tmp_path), "--jobs", "2"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "line_A_d4.csv")))
    assert len(rows) == 3
    summary = json.loads((tmp_path / "line_A_d4_summary.json").read_text())
    assert len(summary["records"]) == 9 and summary["t_tests"]


def test_formation_two_robots(tmp_path):
    cfg = write(tmp_path, "f.json", {"shape": "point", "positions": [[0, 0], [0.8, 0.3]], "r_ctr": 0.05})
    assert cli.main(["formation", "--config", cfg, "--seed", "0", "--out", str(tmp_path)]) == 0
    final = json.loads((tmp_path / "summary.json").read_text())["final_positions"]
    assert all(math.dist(p, (0.4, 0.15)) <= 1e-9 for p in final)


def test_localize(tmp_path):
    cfg = write(tmp_path, "l.json", {"n": 5, "m": 1, "v_max": 0.0, "sense_every": 0, "rounds": 15})
    assert cli.main(["localize", "--config", cfg, "--seed", "3", "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "summary.json").read_text())
    assert out["containment_violations"] == 0
    assert out["static_convergence_round"] is not None


def test_check_passes_and_is_stable(capsys):
    assert cli.main(["check"]) == 0
    first = capsys.readouterr().out
    assert cli.main(["check"]) == 0
    assert capsys.readouterr().out == first
    assert "FAIL" not in first


def test_check_broken_ordering(capsys):
    assert cli.main(["check", "--broken-lp-ordering"]) == 2
    out = capsys.readouterr().out
    line = next(ln for ln in out.splitlines() if "lp_degenerate" in ln)
    assert line.startswith("FAIL") and json.loads(line.split(" ", 2)[2])["locality_failures"] > 0


def test_internal_error_exit_code(monkeypatch):
    def boom(args):
        raise RuntimeError("bug")

    monkeypatch.setitem(cli.COMMANDS, "check", boom)
    assert cli.main(["check"]) == 3

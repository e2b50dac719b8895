"""Command-line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 runtime invariant violated,
3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import geometry, lp, network
from .consensus import RunOptions, global_value, run_constraints_consensus
from .core import (
    BRUTE_FORCE_LIMIT,
    brute_force_basis,
    compare_values,
    check_axioms,
    persistency_check,
    subex_lp,
)
from .errors import ConsensusError, InvariantViolation
from .formation import FormationConfig, run_move_to_consensus_shape
from .localization import LocalizationConfig, PiLP, run_scenario, static_convergence_round
from .montecarlo import ExperimentConfig, export_plot_data, run_sweep

log = logging.getLogger("constraints_consensus")

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# -- config helpers --------------------------------------------------------------

def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return doc


def _seed(args, doc: dict) -> int:
    seed = args.seed if args.seed is not None else doc.get("seed")
    if seed is None:
        raise UsageError(f"{args.command} needs a seed (--seed or a 'seed' key in the config)")
    return int(seed)


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, lp.HalfSpace):
        return {"a": list(x.a), "b": x.b}
    if hasattr(x, "__dataclass_fields__"):
        return asdict(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def build_problem(doc: dict, rng: np.random.Generator):
    """``(problem, constraints)`` from a problem stanza.

    ``{"problem": "lp", "lp": {...}}``, ``{"problem": "lp", "generate":
    {"model": "A", "n": 30, "d": 3}}`` or ``{"problem": "ball", "points":
    [[x, y], ...]}`` (also ``stripe``, ``annulus``; ``generate: {"n": k}``
    draws uniform points).
    """
    kind = doc.get("problem", "lp")
    if kind == "lp":
        if "generate" in doc:
            g = doc["generate"]
            prog = lp.GENERATORS[g.get("model", "A")](int(g["n"]), int(g["d"]), rng)
        elif "lp" in doc:
            prog = lp.LinearProgram.from_json(doc["lp"])
        else:
            raise UsageError("an lp problem needs an 'lp' or a 'generate' stanza")
        return lp.lp_problem_and_constraints(prog)
    if kind in geometry.PROBLEMS:
        if "generate" in doc:
            pts = geometry.random_points(int(doc["generate"]["n"]), rng, generic=kind == "stripe")
        elif "points" in doc:
            pts = geometry.as_points(doc["points"])
        else:
            raise UsageError(f"a {kind} problem needs 'points' or a 'generate' stanza")
        problem = geometry.StripeProblem.for_points(pts) if kind == "stripe" else geometry.PROBLEMS[kind]()
        return problem, pts
    raise UsageError(f"unknown problem kind {kind!r}")


def build_graph(doc: dict, n: int, rng: np.random.Generator) -> network.TimeVaryingDigraph:
    """Graph stanza: ``{"model": "line" | "complete" | "cycle" | "erdos_renyi" | "rgg"}``
    or an explicit ``{"n": .., "edge_sets": [...]}``."""
    if "edge_sets" in doc:
        return network.TimeVaryingDigraph.from_json(doc)
    model = doc.get("model", "line")
    if model == "line":
        return network.gen_line(n)
    if model == "complete":
        return network.gen_complete(n)
    if model == "cycle":
        return network.gen_directed_cycle(n)
    if model == "erdos_renyi":
        return network.gen_erdos_renyi(n, float(doc.get("epsilon", 0.3)), rng)
    if model == "rgg":
        return network.gen_random_geometric(n, rng)
    raise UsageError(f"unknown graph model {model!r}")


def _value_json(v) -> list:
    return [float(x) for x in v]


# -- subcommands -----------------------------------------------------------------

def cmd_solve(args) -> int:
    doc = _load_config(args.config)
    seed = _seed(args, doc)
    rng = np.random.default_rng(seed)
    problem, H = build_problem(doc, rng)
    problem.calls = 0
    basis = subex_lp(problem, H, brute_force_basis(problem, H[:1]), rng)
    value = problem.value(basis)
    out = {
        "problem": doc.get("problem", "lp"),
        "n": len(H),
        "value": _value_json(value),
        "basis": list(basis),
        "primitive_call_count": problem.calls,
    }
    shape = getattr(type(problem), "shape", None)
    if shape is not None and value[0] == 0:
        out["shape"] = asdict(shape(value))
    code = EXIT_OK
    if args.oracle:
        tol = problem.tol
        if len(set(H)) <= BRUTE_FORCE_LIMIT:
            ref = problem.value(brute_force_basis(problem, H))
        elif isinstance(problem, lp.LPProblem):
            A, b = lp.LinearProgram(tuple(problem.c), tuple(H)).matrices()
            ref = lp.lexmin_linprog(A, b, problem.c, problem.box)
            tol = 1e-6  # HiGHS solutions carry about 1e-8 relative error
        else:
            ref = geometry.ORACLES[doc["problem"]](H)
        out["oracle_value"] = _value_json(ref)
        out["oracle_tolerance"] = tol
        out["oracle_match"] = compare_values(value, ref, tol) == 0
        if not out["oracle_match"]:
            code = EXIT_INVARIANT
    _write_json(os.path.join(_outdir(args), "solve.json"), out)
    log.info("value %s after %d primitive calls", out["value"], out["primitive_call_count"])
    return code


def cmd_consensus(args) -> int:
    doc = _load_config(args.config)
    seed = _seed(args, doc)
    ss = np.random.SeedSequence(seed)
    p_rng, g_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    problem, H = build_problem(doc.get("instance", {"problem": "lp", "generate": {"model": "A", "n": 10, "d": 2}}), p_rng)
    graph = build_graph(doc.get("graph", {}), len(H), g_rng)
    opts = RunOptions(**{**doc.get("options", {}), "seed": seed})
    # brute force up to BRUTE_FORCE_LIMIT constraints, a separately seeded solve beyond
    ref = global_value(problem, H, np.random.default_rng([seed, 2]))
    trace = run_constraints_consensus(problem, graph, H, opts, oracle_value=ref)
    match = all(problem.compare(v, ref) == 0 for v in trace.final_values)
    out = {**trace.summary(), "oracle_match": match, "diameter": network.diameter(graph), "seed": seed}
    outdir = _outdir(args)
    _write_json(os.path.join(outdir, "summary.json"), out)
    if trace.values is not None:
        trace.write_csv(os.path.join(outdir, "trace.csv"))
    log.info("completion round %s, oracle match %s", trace.completion_round, match)
    over = any(h > b for h, b in zip(trace.memory_high_water, trace.memory_bound))
    return EXIT_OK if match and not over else EXIT_INVARIANT


def cmd_montecarlo(args) -> int:
    doc = _load_config(args.config)
    doc["seed"] = _seed(args, doc)
    cfg = ExperimentConfig.from_json(doc)
    result = run_sweep(cfg, jobs=args.jobs)
    outdir = _outdir(args)
    csv_path, fit_path = export_plot_data(result, outdir)
    _write_json(os.path.join(outdir, f"{cfg.tag}_summary.json"), result.to_json())
    log.info("wrote %s and %s", csv_path, fit_path)
    return EXIT_OK


def cmd_localize(args) -> int:
    doc = _load_config(args.config)
    doc["seed"] = _seed(args, doc)
    cfg = LocalizationConfig.from_json(doc)
    graph, trace, central, sensed = run_scenario(cfg)
    extra = {"diameter": network.diameter(graph), "seed": cfg.seed}
    if cfg.v_max == 0 and cfg.sense_every == 0:
        ref, vals = PiLP(cfg.box, cfg.directions).solve(sensed[0])
        extra["static_convergence_round"] = static_convergence_round(trace, ref, PiLP.support(vals))
    outdir = _outdir(args)
    trace.write_json(os.path.join(outdir, "summary.json"), extra)
    trace.write_csv(os.path.join(outdir, "trace.csv"))
    over = any(h > b for h, b in zip(trace.memory_high_water, trace.memory_bound))
    return EXIT_OK if trace.containment_violations == 0 and not over else EXIT_INVARIANT


def cmd_formation(args) -> int:
    doc = _load_config(args.config)
    doc["seed"] = _seed(args, doc)
    cfg = FormationConfig.from_json(doc)
    trace = run_move_to_consensus_shape(cfg, check=False)
    outdir = _outdir(args)
    trace.write_json(os.path.join(outdir, "summary.json"))
    trace.write_csv(os.path.join(outdir, "trace.csv"))
    ok = trace.motion_violations == 0 and trace.edge_violations == 0
    return EXIT_OK if ok else EXIT_INVARIANT


CHECK_SEED = 20240601


def run_checks(broken_lp_ordering: bool = False, trials: int = 200) -> list[dict]:
    """Seed-pinned self-test: axioms, persistency search and consensus-oracle equivalence."""
    rng = np.random.default_rng(CHECK_SEED)
    report = []

    def axioms(name, problem, H):
        r = check_axioms(problem, H, trials, rng)
        report.append({
            "suite": f"axioms:{name}", "trials": r.trials, "passed": r.passed,
            "monotonicity_failures": r.monotonicity_failures, "locality_failures": r.locality_failures,
            "closure_failures": r.closure_failures, "primitive_failures": r.primitive_failures,
        })

    tiebreak = not broken_lp_ordering
    deg = lp.degenerate_instance()
    axioms("lp_degenerate", lp.LPProblem.from_lp(deg, lex_tiebreak=tiebreak), list(deg.constraints))
    prog = lp.gen_model_a(8, 2, rng)
    axioms("lp_random", lp.LPProblem.from_lp(prog, lex_tiebreak=tiebreak), list(prog.constraints))
    for kind in ("ball", "stripe", "annulus"):
        pts = geometry.random_points(7, rng, generic=kind == "stripe")
        problem = geometry.StripeProblem.for_points(pts) if kind == "stripe" else geometry.PROBLEMS[kind]()
        axioms(kind, problem, pts)

    # persistency: every reported witness must really drop out of a basis
    found, valid = 0, 0
    for _ in range(20):
        prog = lp.gen_model_a(5, 2, rng)
        problem, H = lp.lp_problem_and_constraints(prog, lex_tiebreak=tiebreak)
        ok, witness = persistency_check(problem, H)
        if not ok:
            found += 1
            h, G = witness
            valid += h in brute_force_basis(problem, H) and h in G and h not in brute_force_basis(problem, G)
    report.append({"suite": "persistency", "instances": 20, "non_persistent": found,
                   "valid_witnesses": int(valid), "passed": valid == found})

    matches = 0
    runs = 10
    for k in range(runs):
        prog = lp.GENERATORS["AB"[k % 2]](int(rng.integers(5, 12)), 2, rng)
        problem, H = lp.lp_problem_and_constraints(prog, lex_tiebreak=tiebreak)
        graph = network.gen_line(len(H))
        ref = problem.value(brute_force_basis(problem, H))
        trace = run_constraints_consensus(problem, graph, H, RunOptions(seed=k, record=False), oracle_value=ref)
        matches += trace.converged and all(problem.compare(v, ref) == 0 for v in trace.final_values)
    report.append({"suite": "oracle_equivalence", "runs": runs, "matches": int(matches), "passed": matches == runs})
    return report


def cmd_check(args) -> int:
    report = run_checks(args.broken_lp_ordering)
    for r in report:
        counts = {k: v for k, v in r.items() if k not in ("suite", "passed")}
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['suite']} {json.dumps(counts)}")
    if args.out is not None:
        _write_json(os.path.join(_outdir(args), "check.json"), report)
    return EXIT_OK if all(r["passed"] for r in report) else EXIT_INVARIANT


COMMANDS = {
    "solve": cmd_solve,
    "consensus": cmd_consensus,
    "montecarlo": cmd_montecarlo,
    "localize": cmd_localize,
    "formation": cmd_formation,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--oracle", action="store_true", help="cross-check against an independent oracle")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="constraints-consensus", description="Distributed LP-type solvers and experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "check":
            p.set_defaults(out=None)
            p.add_argument("--broken-lp-ordering", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConsensusError, ValueError, KeyError) as exc:
        # bad inputs surface from the modules as these
        print(f"error in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

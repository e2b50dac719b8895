"""Empirical probability that completion stays within a multiple of the diameter.

The number of runs per n comes from the Chernoff bound for the requested
accuracy and confidence unless --runs is given.
"""
import argparse

from constraints_consensus.montecarlo import ExperimentConfig, chernoff_samples, empirical_probability, run_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graph", default="line", choices=["line", "erdos_renyi", "rgg"])
    ap.add_argument("--model", default="A", choices=["A", "B"])
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--n", type=int, nargs="+", default=[40, 60])
    ap.add_argument("--factor", type=float, default=4.0, help="threshold is factor * (n - 1)")
    ap.add_argument("--epsilon", type=float, default=0.05)
    ap.add_argument("--eta", type=float, default=0.05)
    ap.add_argument("--runs", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    runs = args.runs or chernoff_samples(args.epsilon, args.eta, exact=True)
    cfg = ExperimentConfig(args.graph, args.model, args.d, args.n, runs, args.seed, budget=10**8)
    res = run_sweep(cfg, jobs=args.jobs)
    for n, recs in sorted(res.by_n().items()):
        bound = args.factor * (n - 1)
        p = empirical_probability(r.completion is not None and r.completion <= bound for r in recs)
        worst = max((r.completion for r in recs if r.completion is not None), default=None)
        print(f"n={n}: P(completion <= {bound:g}) ~ {p:.4f} over {len(recs)} runs, worst {worst}")


if __name__ == "__main__":
    main()

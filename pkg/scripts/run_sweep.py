"""Completion time of constraints consensus against the graph diameter.

Runs a sweep over n, prints one row per n with the mean completion/diameter
ratio and its interval, the line fit of mean completion on n, and one-sided
t-tests of the ratio against mu0.  Writes the plot data to --out.
"""
import argparse
import json
import time

from constraints_consensus.montecarlo import ExperimentConfig, export_plot_data, run_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graph", default="line", choices=["line", "erdos_renyi", "rgg"])
    ap.add_argument("--model", default="A", choices=["A", "B"])
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--n", type=int, nargs="+", default=[20, 40, 60, 80, 100, 120])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mu0", type=float, default=1.5)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/sweep")
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(args.graph, args.model, args.d, args.n, args.runs, args.seed)
    t0 = time.perf_counter()
    res = run_sweep(cfg, jobs=args.jobs)
    print(f"{cfg.tag}: {len(res.records)} runs in {time.perf_counter() - t0:.1f}s")
    print(f"{'n':>5} {'mean':>8} {'std':>7} {'diam':>6} {'ratio':>6} {'95% ci':>15} {'max':>6}")
    for r in res.rows():
        print(f"{r['n']:>5} {r['mean_completion']:8.2f} {r['std']:7.2f} {r['diameter']:6.1f} "
              f"{r['ratio']:6.3f} [{r['ci_low']:.3f}, {r['ci_high']:.3f}] {r['max_ratio']:6.2f}")
    fit = res.fit()
    print(f"fit: completion = {fit.slope:.4f} n + {fit.intercept:.3f}  (r2 {fit.r2:.4f})")
    for t in res.t_tests(args.mu0):
        print(f"n={t['n']}: t={t['t']:.3f} df={t['df']} p(mean < {args.mu0})={t['p_one_sided']:.3g}")
    csv_path, fit_path = export_plot_data(res, args.out)
    with open(f"{args.out}/{cfg.tag}_records.json", "w") as fh:
        json.dump(res.to_json(), fh, indent=2)
    print("wrote", csv_path, fit_path)


if __name__ == "__main__":
    main()

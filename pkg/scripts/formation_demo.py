"""Robots agree on the optimal point, line or circle and move onto it."""
import argparse

from constraints_consensus.formation import SHAPES, FormationConfig, run_move_to_consensus_shape


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shape", nargs="+", default=list(SHAPES), choices=SHAPES)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--r-ctr", type=float, default=0.01)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--csv", help="write the trace of the first run to this file")
    args = ap.parse_args(argv)

    for shape in args.shape:
        for seed in range(args.seeds):
            trace = run_move_to_consensus_shape(FormationConfig(shape, r_ctr=args.r_ctr, n=args.n, seed=seed))
            if args.csv and seed == 0:
                trace.write_csv(f"{shape}_{args.csv}")
            print(f"{shape} seed {seed}: consensus at round {trace.consensus_round}, "
                  f"stopped at {trace.rounds}, max distance {max(trace.final_distances()):.2e}")


if __name__ == "__main__":
    main()

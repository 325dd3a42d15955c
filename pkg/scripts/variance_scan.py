"""Spread of the ESD moments across replications as N grows at fixed c.

    python3 scripts/variance_scan.py --ladder 100 200 400 --reps 50
"""

import argparse

from covspec import experiments as ex
from covspec.config import parse_config


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--ladder", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--c", type=float, default=0.5)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--k-max", type=int, default=3)
    ap.add_argument("--estimator", choices=("path", "gram", "modified"), default="gram")
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    N0 = args.ladder[0]
    cfg = parse_config({
        "model": {"N": N0, "n": round(N0 / args.c), "breakpoints": [0.0, 0.5, 1.0],
                  "ensembles": [{"kind": "identity"},
                                {"kind": "diagonal_from_spectrum",
                                 "two_point": {"value_a": 1, "value_b": 4, "weight_a": 0.5}}]},
        "run": {"master_seed": args.seed, "reps": args.reps, "k_max": args.k_max,
                "estimators": [args.estimator], "threads": args.threads},
    })
    scan = ex.variance_scan(cfg, args.ladder, args.reps, args.estimator, args.k_max, args.threads)
    print(f"{'N':>6} {'n':>6} {'k':>2} {'mean':>12} {'std':>10}")
    for r in scan["rows"]:
        print(f"{r['N']:>6} {r['n']:>6} {r['k']:>2} {r['mean']:12.5f} {r['std']:10.5f}")
    for k, slope in scan["loglog_slopes"].items():
        print(f"k={k}: log-log slope of std vs N = {slope:.3f}")


if __name__ == "__main__":
    main()

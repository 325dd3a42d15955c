"""Empirical moments of the three estimators against the oracle limit.

    python3 scripts/mc_convergence.py --N 300 --n 600 --reps 20
"""

import argparse

import numpy as np

from covspec import experiments as ex
from covspec.mixed_moments import MixedMomentProvider
from covspec.model import EnsembleSpec, build_integrand


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=300)
    ap.add_argument("--n", type=int, default=600)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--k-max", type=int, default=3)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    specs = [EnsembleSpec("identity"), EnsembleSpec("diagonal_from_spectrum", two_point=(1, 4, 0.5))]
    integ = build_integrand(specs, (0.0, 0.5, 1.0), args.N, args.seed)
    ests = ("path", "gram", "modified")
    res = ex.run_reps(integ, args.n, args.seed, args.reps, ests, args.k_max, args.threads)
    limits = ex.limit_moments(args.k_max, args.N / args.n, integ.deltas,
                              MixedMomentProvider.numeric(integ), with_formula=False)

    print(f"{'est':>9} {'k':>2} {'empirical':>12} {'stderr':>10} {'oracle':>12} {'rel_err':>9}")
    for row in ex.comparison_table(res, ests, limits):
        print(f"{row['estimator']:>9} {row['k']:>2} {row['empirical']:12.5f} {row['stderr']:10.5f} "
              f"{row['oracle']:12.5f} {row['rel_err']:9.5f}")
    ks = np.array([r.ks_path_gram for r in res])
    print(f"ks(path, gram): max {ks.max():.5f}, bound 4m/N = {4 * integ.m / integ.N:.5f}")


if __name__ == "__main__":
    main()

"""Term-by-term comparison of the closed-form coefficients with the graph count.

    python3 scripts/formula_audit.py --k-max 4 --m-max 2
"""

import argparse

from covspec.limit_formula import compare_formula_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--k-max", type=int, default=3)
    ap.add_argument("--m-max", type=int, default=2)
    ap.add_argument("--mode", choices=("stabilizer", "literal"), default="stabilizer")
    args = ap.parse_args()

    for m in range(1, args.m_max + 1):
        for k in range(1, args.k_max + 1):
            rep = compare_formula_oracle(k, m, args.mode)
            if "error" in rep:
                print(f"k={k} m={m}: {rep['error']}")
                continue
            status = "match" if rep["matches"] else f"{len(rep['diffs'])} diffs"
            print(f"k={k} m={m}: {status}")
            for d in rep["diffs"]:
                print(f"    r={d['r']} s={d['s_counts']} nu={d['nu']} l'={d['lprime']} "
                      f"formula={d['formula_coeff']} oracle={d['oracle_coeff']}")


if __name__ == "__main__":
    main()

"""Profit as a function of K: K-Median forecast, K-MedianPlex, and the K-Median network's real profit.

    python scripts/profit_curves.py --n 12 --alpha 0.1 > curves.csv
"""

import argparse
import sys

from locplex import io
from locplex.harness import GridSpec, profit_curves, synth_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kmax", type=int, default=9)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--gamma", type=float, default=100.0, help="nominal grid units")
    ap.add_argument("--rho", type=float, default=0.0, help="nominal grid units")
    ap.add_argument("--phi", type=float, default=50_000.0)
    ap.add_argument("--mode", choices=("auto", "exact", "local"), default="auto")
    args = ap.parse_args()

    inst = synth_instance(args.n, args.seed)
    params = GridSpec().params(args.alpha, args.gamma, args.rho, args.phi)
    rows = profit_curves(inst, params, range(1, min(args.kmax, inst.n) + 1), args.mode)
    cols = list(rows[0])
    sys.stdout.write(io.csv_text(cols, ([r[c] for c in cols] for r in rows)))


if __name__ == "__main__":
    main()

"""Disturbance of the key-riding ancilla attack over a grid of rotation angles.

    python3 scripts/theta_sweep.py --points 17 --trials 2000 --out sweep.csv

Minima should sit at multiples of pi/4 and nowhere else.
"""

import argparse
import math
import sys

from qdialogue.analysis import theta_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--points", type=int, default=17, help="grid points over [0, pi]")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--rounds", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    thetas = [math.pi * i / (args.points - 1) for i in range(args.points)]
    result = theta_sweep(thetas, trials=args.trials, seed=args.seed, rounds=args.rounds)
    text = result.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for p in result.points:
        bar = "#" * int(round(200 * p.disturbance))
        print(f"{p.theta / math.pi:6.3f} pi  {p.disturbance:.4f}  {bar}", file=sys.stderr)


if __name__ == "__main__":
    main()

"""Efficiency against key reuse, formula next to a transcript audit.

Audits run a real dialogue for every finite row, so keep --max-rounds modest.
"""

import argparse
import math

from qdialogue.analysis import audit_efficiency, efficiency, summary_row
from qdialogue.protocol import DecoyPolicy, DialogueConfig, run_dialogue


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--max-rounds", type=int, default=100)
    ap.add_argument("--include-decoys", action="store_true")
    ap.add_argument("--strict", action="store_true")
    args = ap.parse_args()

    policy = DecoyPolicy()
    print(f"{'rounds':>7} {'eta (formula)':>14} {'eta (audit)':>12} {'float':>8}")
    rounds = 1
    while rounds <= args.max_rounds:
        f = efficiency(args.n, rounds, args.include_decoys, policy, args.strict)
        t = run_dialogue(DialogueConfig(n=args.n, rounds=rounds, policy=policy), rounds)
        a = audit_efficiency(t, args.include_decoys, args.strict)
        print(f"{rounds:>7} {str(f.eta):>14} {str(a.eta):>12} {float(f.eta):8.4f}")
        rounds *= 10 if rounds >= 10 else 2 if rounds < 2 else 5
    limit = efficiency(args.n, math.inf, args.include_decoys, policy, args.strict)
    print(f"{'inf':>7} {str(limit.eta):>14} {'-':>12} {float(limit.eta):8.4f}")
    row = summary_row(limit)
    print(f"\nresource: {row['initial_quantum_resource']}; measurement: {row['quantum_measurement']}")


if __name__ == "__main__":
    main()

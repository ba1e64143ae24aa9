"""Intercept-resend detection versus number of decoys per transmission.

Prints the per-decoy error rate (should hover at 0.25) and the abort rate,
which should follow 1 - 0.75**d.
"""

import argparse

from qdialogue.adversary import AttackModel, estimate_detection_probability
from qdialogue.protocol import DecoyPolicy, DialogueConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--strategy", choices=("random_ZX", "always_Z"), default="random_ZX")
    ap.add_argument("--step", choices=("step1", "step2", "step3"), default="step1")
    args = ap.parse_args()

    model = AttackModel("intercept_resend", args.step, args.strategy)
    print("decoys,per_decoy_rate,ci_low,ci_high,abort_rate,expected_abort")
    for d in (1, 2, 4, 8, 16):
        cfg = DialogueConfig(n=2, policy=DecoyPolicy(count=d))
        est = estimate_detection_probability(model, cfg, args.trials, args.seed)
        lo, hi = est.per_decoy_ci
        print(f"{d},{est.per_decoy_rate:.4f},{lo:.4f},{hi:.4f},{est.abort_rate:.4f},{1 - 0.75 ** d:.4f}")


if __name__ == "__main__":
    main()

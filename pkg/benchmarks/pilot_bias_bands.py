"""Pilot run that fixes the MLE bias-band half-widths used by the acceptance suite.

Half-width = 3 * sd_pilot / sqrt(replications), per (family, n, coordinate).
Run once with a seed that the acceptance suite does not use and paste the
printed table into tests/test_acceptance.py.
"""

import argparse
import math

from rwre_mle.env_model import BetaEnv, TwoPointFree, TwoPointKnown
from rwre_mle.experiment import ExperimentConfig, run_experiment, summarize

FAMILIES = {
    "example1": TwoPointKnown(0.4, 0.7, 0.3),
    "example2": TwoPointFree(0.3, 0.4, 0.7),
    "example3": BetaEnv(5.0, 1.0),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=777)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    print("PILOT_HALF_WIDTHS = {")
    for name, fam in FAMILIES.items():
        cfg = ExperimentConfig(fam, n_grid=(1000, 5000, 10000), replications=args.reps,
                               master_seed=args.seed, estimators=("mle",))
        rows = summarize(run_experiment(cfg, jobs=args.jobs), fam.theta)
        for r in rows:
            hw = 3 * r.sd / math.sqrt(args.reps)
            print(f"    ({name!r}, {r.n}, {r.coord!r}): {hw:.4g},  # sd={r.sd:.4g}")
    print("}")


if __name__ == "__main__":
    main()

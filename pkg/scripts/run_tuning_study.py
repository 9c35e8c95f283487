"""Paired random search on the toy ring, with and without the scheduler.

Writes trials.csv, curve_off.csv, curve_on.csv and summary.json under the
output directory and prints the best-of-k means side by side.

    python scripts/run_tuning_study.py [--arms off,on,decay] [--parallelism 4]
"""

import argparse
import json
from pathlib import Path

from gapaware.study import ExperimentConfig, run_tune

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "toy_tune.json")
    ap.add_argument("--output", default="runs/toy_tune")
    ap.add_argument("--arms", default="off,on")
    ap.add_argument("--parallelism", type=int, default=1)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config).replace(
        output=args.output, arms=tuple(args.arms.split(",")), parallelism=args.parallelism)
    report = run_tune(cfg)
    arms = list(report["arms"])
    print("k   " + "  ".join(f"{a:>12}" for a in arms))
    for i, k in enumerate(cfg.budgets):
        print(f"{k:<4}" + "  ".join(f"{report['arms'][a]['curve'][i]['mean']:12.6f}" for a in arms))
    for a in arms:
        print(a, "best trial:", json.dumps(report["arms"][a]["best_hparams"]))


if __name__ == "__main__":
    main()

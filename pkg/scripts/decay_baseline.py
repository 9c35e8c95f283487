"""Tuning study with three arms: no schedule, gap-aware schedule, and
exponential decay rho^(s/T) with rho drawn log-uniformly per trial.

    python scripts/decay_baseline.py [--n-trials 30]
"""

import argparse
from pathlib import Path

from gapaware.study import ExperimentConfig, run_tune

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "toy_tune.json")
    ap.add_argument("--output", default="runs/decay_baseline")
    ap.add_argument("--n-trials", type=int, default=30)
    ap.add_argument("--parallelism", type=int, default=1)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config).replace(
        output=args.output, n_trials=args.n_trials, arms=("off", "on", "decay"),
        parallelism=args.parallelism)
    rep = run_tune(cfg)
    for arm, r in rep["arms"].items():
        print(f"{arm:>6}: " + "  ".join(f"k={p['k']}: {p['mean']:.6f}" for p in r["curve"]))


if __name__ == "__main__":
    main()

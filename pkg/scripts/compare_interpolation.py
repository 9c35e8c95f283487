"""Linear vs exponential interpolation of the multipliers, same seeds and rates.

    python scripts/compare_interpolation.py [--n-seeds 10]
"""

import argparse
from pathlib import Path

from gapaware.study import ExperimentConfig, run_stability

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "toy_tune.json")
    ap.add_argument("--output", default="runs/interpolation")
    ap.add_argument("--n-seeds", type=int, default=10)
    ap.add_argument("--lr", type=float, default=2e-3)
    args = ap.parse_args()
    base = ExperimentConfig.load(args.config).replace(
        n_seeds=args.n_seeds, lr_g=args.lr, lr_d=args.lr, arms=("on",))
    for mode in ("exponential", "linear"):
        rep = run_stability(base.replace(interpolation=mode, output=str(Path(args.output) / mode)))
        s = rep["arms"]["on"]
        print(f"{mode:>11}: gap {s['final_gap']['mean']:.4g} +- {s['final_gap']['stderr']:.2g}, "
              f"metric {s['final_metric']['mean']:.4g} +- {s['final_metric']['stderr']:.2g}")


if __name__ == "__main__":
    main()

"""Vary each scheduler parameter over orders of magnitude, others at defaults.

    python scripts/run_sensitivity.py [--params h_min,f_max]
"""

import argparse
from pathlib import Path

import numpy as np

from gapaware.study import ExperimentConfig, run_sweep

HERE = Path(__file__).parent

GRIDS = {
    "h_min": np.logspace(-3, 0, 7),
    "f_max": np.logspace(0, 2, 7),
    "x_min": np.logspace(-3, 1, 9),
    "x_max": np.logspace(-3, 1, 9),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "toy_tune.json")
    ap.add_argument("--output", default="runs/sensitivity")
    ap.add_argument("--params", default="h_min,f_max,x_min,x_max")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--lr", type=float, default=2e-3)
    ap.add_argument("--beta1", type=float, default=0.5)
    args = ap.parse_args()
    base = ExperimentConfig.load(args.config).replace(
        seeds_per_trial=args.seeds, lr_g=args.lr, lr_d=args.lr, beta1=args.beta1)
    for name in args.params.split(","):
        cfg = base.replace(sweep_param=name, grid=tuple(float(v) for v in GRIDS[name]),
                           output=str(Path(args.output) / name))
        for param, value, mean, se in run_sweep(cfg):
            print(f"{param:>6} {value:10.4g}  {mean:.5f} +- {se:.5f}")


if __name__ == "__main__":
    main()

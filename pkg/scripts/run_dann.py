"""DANN on the two-blob domain pair: tune lambda, rates and V* with the
scheduler, then compare the tuned setting against source-only training.

    python scripts/run_dann.py [--n-seeds 20]
"""

import argparse
from pathlib import Path

from gapaware.study import ExperimentConfig, run_stability, run_tune

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "dann.json")
    ap.add_argument("--output", default="runs/dann")
    ap.add_argument("--n-seeds", type=int, default=20)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    out = Path(args.output)
    tune = run_tune(cfg.replace(output=str(out / "tune"), arms=("on",)))
    best = tune["arms"]["on"]["best_hparams"]
    print("tuned:", best)
    # the source-only arm reuses the tuned rates with lambda forced to 0
    rep = run_stability(cfg.replace(
        output=str(out / "stability"), arms=("source_only", "on"), n_seeds=args.n_seeds,
        lr_g=best["lr_g"], lr_d=best["lr_d"], beta1=best["beta1"], lam=best["lambda"],
        v_star=best["v_star"]))
    for arm, s in rep["arms"].items():
        m = s["test_metric"]
        print(f"{arm:>12}: target accuracy {m['mean']:.4f} +- {m['stderr']:.4f}")
    c = rep["comparison"]["test_metric"]
    print(f"one-sided t-test p={c.get('p_value', float('nan')):.3g}")


if __name__ == "__main__":
    main()

"""Many seeds at fixed hyperparameters, scheduler on vs off.

Hyperparameters come from the config or, with --best-from, from the best
trial of each arm in a tuning study's trials.csv.

    python scripts/run_stability.py --best-from runs/toy_tune/trials.csv
"""

import argparse
from pathlib import Path

from gapaware.study import ExperimentConfig, run_stability

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "toy_tune.json")
    ap.add_argument("--output", default="runs/toy_stability")
    ap.add_argument("--best-from")
    ap.add_argument("--n-seeds", type=int, default=20)
    ap.add_argument("--lr", type=float, help="shared rate when --best-from is not given")
    ap.add_argument("--beta1", type=float)
    ap.add_argument("--interpolation", default="exponential")
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    kw = dict(output=args.output, n_seeds=args.n_seeds, best_from=args.best_from,
              interpolation=args.interpolation)
    if args.lr is not None:
        kw.update(lr_g=args.lr, lr_d=args.lr)
    if args.beta1 is not None:
        kw["beta1"] = args.beta1
    rep = run_stability(cfg.replace(**kw))
    for arm, stats in rep["arms"].items():
        g, m = stats["final_gap"], stats["final_metric"]
        print(f"{arm:>4}: gap {g['mean']:.4g} +- {g['stderr']:.2g} (median {g['median']:.4g}), "
              f"metric {m['mean']:.4g} +- {m['stderr']:.2g}")
    comp = rep.get("comparison", {}).get("final_gap")
    if comp:
        print(f"gap t-test p={comp.get('p_value', float('nan')):.4g}, "
              f"sign test {comp['sign_wins']}/{comp['sign_n']} p={comp['sign_p']:.4g}")


if __name__ == "__main__":
    main()

"""Random-hyperparameter runs without the scheduler: is a larger end-of-training
gap associated with a worse Frechet distance?

    python scripts/run_correlation.py [--log-gap] [--metric-threshold 0.5]
"""

import argparse
from pathlib import Path

from gapaware.study import ExperimentConfig, run_correlate

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "toy_correlate.json")
    ap.add_argument("--output", default="runs/toy_correlate")
    ap.add_argument("--log-gap", action="store_true")
    ap.add_argument("--metric-threshold", type=float)
    ap.add_argument("--parallelism", type=int, default=1)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config).replace(
        output=args.output, log_gap=args.log_gap, metric_threshold=args.metric_threshold,
        parallelism=args.parallelism)
    rep = run_correlate(cfg)
    if rep["status"] == "ok":
        print(f"spearman rho={rep['rho']:.3f} p={rep['p_value']:.4f} over {rep['n_used']} runs")
    else:
        print(f"correlation {rep['status']}: {rep.get('reason')}")


if __name__ == "__main__":
    main()

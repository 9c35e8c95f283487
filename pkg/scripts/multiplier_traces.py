"""Record the discriminator's rate multiplier and loss estimate over one run
for each GAN variant, as CSV (step, batch loss, estimate, multiplier).

    python scripts/multiplier_traces.py [--variants nsgan,wgan]
"""

import argparse
from pathlib import Path

from gapaware.metrics import write_rows
from gapaware.study import ExperimentConfig, Job, run_job

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE / "configs" / "toy_tune.json")
    ap.add_argument("--output", default="runs/traces")
    ap.add_argument("--variants", default="standard,nsgan,wgan,lsgan")
    ap.add_argument("--lr", type=float, default=2e-3)
    args = ap.parse_args()
    base = ExperimentConfig.load(args.config).replace(lr_g=args.lr, lr_d=args.lr)
    for variant in args.variants.split(","):
        kw = {"task": variant}
        if variant == "wgan":
            kw.update(clip=0.05, optimizer="sgd", lr_d=5e-2, lr_g=5e-2)
        rec = run_job(base.replace(**kw), Job(0, 0, "on"))
        s = rec.steps
        path = Path(args.output) / f"{variant}.csv"
        write_rows(path, ("step", "batch_disc_loss", "ema_estimate", "multiplier"),
                   [[i, float(a), float(b), float(m)] for i, (a, b, m) in
                    enumerate(zip(s["batch_disc_loss"], s["ema_estimate"], s["multiplier"]))])
        m = s["multiplier"]
        print(f"{variant:>8}: multiplier min {m.min():.3f} mean {m.mean():.3f} max {m.max():.3f} -> {path}")


if __name__ == "__main__":
    main()

"""Command-line entry point: ``gapaware {train,tune,sweep,correlate,stability}``.

Every subcommand reads an optional JSON config (``--config``) and accepts a
flag for each config field, spelled with dashes (``--lr-g 1e-3``,
``--scheduler off``, ``--hidden 32,32``).  Flags win over the file.
"""

from __future__ import annotations

import argparse
import sys
import types
import typing
from dataclasses import fields

from . import study
from .study import ConfigError, ExperimentConfig

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(s: str) -> bool:
    v = s.lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _converter(tp):
    """Turn a field annotation into a string parser."""
    optional = False
    args = typing.get_args(tp)
    if typing.get_origin(tp) in (typing.Union, types.UnionType) and type(None) in args:
        optional = True
        tp = next(a for a in args if a is not type(None))
        args = typing.get_args(tp)
    if typing.get_origin(tp) is tuple:
        elem = _converter(args[0])
        base = lambda s: tuple(elem(x) for x in s.split(",") if x.strip())  # noqa: E731
    elif tp is bool:
        base = _parse_bool
    else:
        base = tp

    def convert(s: str):
        if optional and s.lower() in ("none", "null"):
            return None
        try:
            return base(s)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return convert


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    hints = typing.get_type_hints(ExperimentConfig)
    for f in fields(ExperimentConfig):
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=_converter(hints[f.name]),
                       default=argparse.SUPPRESS, metavar=f.name.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapaware", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train": "single training run with trace and summary",
        "tune": "paired random-search study with bootstrap curves",
        "sweep": "sensitivity of one scheduler parameter",
        "correlate": "rank correlation of final gap and final metric",
        "stability": "many seeds at fixed hyperparameters",
    }
    for name, text in helps.items():
        _add_config_flags(sub.add_parser(name, help=text))
    return parser


def load_config(ns: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.load(ns.config).to_dict() if ns.config else {}
    overrides = {f.name: getattr(ns, f.name) for f in fields(ExperimentConfig) if hasattr(ns, f.name)}
    return ExperimentConfig.from_dict({**base, **overrides})


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = load_config(ns)
        if ns.command == "train":
            rec = study.run_train(cfg)
            print(f"best metric {rec.final_metric:.6g}, final gap {rec.final_gap:.6g}, "
                  f"diverged={rec.diverged}")
            return EXIT_DIVERGED if rec.diverged else EXIT_OK
        runner = {"tune": study.run_tune, "sweep": study.run_sweep,
                  "correlate": study.run_correlate, "stability": study.run_stability}[ns.command]
        report = runner(cfg)
    except (ConfigError, ValueError) as exc:
        # invalid values only surface when the run is built, e.g. a negative rate
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    diverged = report["all_diverged"] if isinstance(report, dict) else False
    if ns.command == "sweep":
        for row in report:
            print(*row)
    print(f"wrote results to {cfg.output}")
    return EXIT_DIVERGED if diverged else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

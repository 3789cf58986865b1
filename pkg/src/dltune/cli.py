"""Command line entry point: ``dltune {profile,tune,sweep-lr,report}``.

Exit codes: 0 on success, 1 when some datasets failed (the rest are still
written), 2 on an invalid config or arguments.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from dltune.experiment import ConfigError, load_config, run_profile, run_report, run_sweep, run_tune
from dltune.report import LogSchemaError

log = logging.getLogger("dltune")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment YAML")
    p.add_argument("--seed", type=int, help="override the config's master seed")
    p.add_argument("--out", help="output directory (default: the config's output_dir)")
    p.add_argument("--data-dir", help="directory holding the dataset files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dltune", description="Hyperparameter tuning benchmark for small neural networks")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="sparsity and shape of each dataset")
    _add_common(p)

    p = sub.add_parser("tune", help="search hyperparameters and write trial logs")
    _add_common(p)
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--strategy", choices=("baseline", "grid", "random", "nelder_mead"))

    p = sub.add_parser("sweep-lr", help="accuracy over a learning-rate grid with repeated CV")
    _add_common(p)
    p.add_argument("--jobs", type=int, help="worker processes")

    p = sub.add_parser("report", help="rebuild reports from one or more trials.csv logs")
    p.add_argument("logs", nargs="+", help="trials.csv files")
    p.add_argument("--out", required=True)
    return parser


def _config(args):
    cfg = load_config(args.config, data_dir=args.data_dir)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    if getattr(args, "jobs", None) is not None:
        cfg = replace(cfg, jobs=args.jobs)
    if getattr(args, "strategy", None):
        cfg = replace(cfg, strategy=replace(cfg.strategy, name=args.strategy))
    if args.command == "sweep-lr" and cfg.strategy.name != "lr_sweep":
        cfg = replace(cfg, strategy=replace(cfg.strategy, name="lr_sweep"))
    if args.command == "tune" and cfg.strategy.name == "lr_sweep":
        raise ConfigError("strategy lr_sweep runs through 'dltune sweep-lr'")
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "report":
            run_report(args.logs, args.out)
            return 0
        cfg = _config(args)
        if args.command == "profile":
            return run_profile(cfg)
        if args.command == "tune":
            return run_tune(cfg)
        return run_sweep(cfg)
    except (ConfigError, LogSchemaError) as exc:
        log.error("%s", exc)
        return 2
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())

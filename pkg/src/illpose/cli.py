"""Command line entry point ``illpose``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import EXPERIMENTS, FAMILIES, ExperimentConfig, load_config, parse_window, validate
from .errors import ConfigError, InvalidArgument, NumericalFailure

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="illpose", description="Decide and witness 'more ill-posed than' between discretized operators.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="flat key = value config file (optional for paper-suite)")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--levels", help="comma-separated discretization sizes, e.g. 64,128,256")
    p.add_argument("--window", help="index window a:b")
    p.add_argument("--family", choices=FAMILIES, help="generator family for dichotomy runs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if cfg.experiment != args.experiment:
            raise ConfigError(f"config declares experiment {cfg.experiment!r}, command line asks for {args.experiment!r}")
    elif args.experiment == "paper-suite":
        cfg = ExperimentConfig("paper-suite")
    else:
        raise ConfigError(f"{args.experiment} needs --config")
    levels = None
    if args.levels:
        try:
            levels = tuple(int(x) for x in args.levels.split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"--levels expects integers, got {args.levels!r}") from None
    window = parse_window(args.window) if args.window else None
    return cfg.with_overrides(output_dir=args.out, levels=levels, window=window, family=args.family)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    seed = os.environ.get("ILLPOSE_SEED")
    if seed is not None:
        print(f"ILLPOSE_SEED={seed} (accepted; no randomized paths)", file=sys.stderr)
    try:
        cfg = validate(_config_from_args(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .experiments import run_experiment

    try:
        report = run_experiment(cfg)
    except (ConfigError, InvalidArgument) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    path = os.path.join(report.output_dir, "report.json")
    if not report.ok:
        print(f"numerical failure in {report.failure['stage']}: {report.failure['message']}", file=sys.stderr)
        print(path)
        return EXIT_NUMERICAL
    if report.verdict is not None:
        v = report.verdict
        print(f"{v.subject} {v.relation.value} {v.reference}")
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

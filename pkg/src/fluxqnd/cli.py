"""Command-line entry point: ``run``, ``sweep``, ``validate`` and ``list-experiments``.

Exit codes are 0 on success, 2 for configuration errors and 3 for
numerical failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS, SWEEPABLE, default_config, dump_config, load_config
from .errors import ConfigError, NumericalError
from .runner import lint_config, override_grid, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _parse_values(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"--values: cannot parse {text!r} as comma-separated numbers") from None


def _report(outcome, stream) -> None:
    print(f"wrote {len(outcome.files)} CSV file(s) to {outcome.output_dir}", file=stream)
    for res in outcome.failed:
        print(f"task {res.task} failed: {res.error.splitlines()[0]}", file=sys.stderr)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    outcome = run_experiment(cfg, args.output, args.workers)
    _report(outcome, sys.stdout)
    failed = outcome.failed
    if failed:
        # invalid parameter combinations surface as non-numerical task errors
        return EXIT_NUMERICAL if all(r.numerical for r in failed) else EXIT_CONFIG
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.values is not None:
        values = _parse_values(args.values)
    elif args.num is not None:
        if args.start is None or args.stop is None:
            raise ConfigError("--num needs --start and --stop")
        values = list(np.linspace(args.start, args.stop, args.num)) if args.num > 0 else []
    else:
        raise ConfigError("sweep needs --values or --start/--stop/--num")
    cfg = override_grid(cfg, args.field, values)
    outcome = run_experiment(cfg, args.output, args.workers)
    _report(outcome, sys.stdout)
    if outcome.results and len(outcome.failed) == len(outcome.results):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"schema: error: {exc}")
        return EXIT_CONFIG
    print(f"schema: ok ({cfg['experiment']})")
    for finding in lint_config(cfg):
        print(f"{finding.check}: {finding.level}: {finding.message}")
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    for name, entry in EXPERIMENTS.items():
        axis = ", ".join(entry["grid"]) or "-"
        print(f"{name:8s} grid: {axis:20s} {entry['about']}")
    if args.write_defaults is not None:
        out = Path(args.write_defaults)
        out.mkdir(parents=True, exist_ok=True)
        for name in EXPERIMENTS:
            (out / f"{name}.yaml").write_text(dump_config(default_config(name)), encoding="utf-8")
        print(f"default configurations written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluxqnd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("config")
    run.add_argument("--output", help="output directory (default: $FLUXQND_OUTPUT_ROOT/<output_dir>)")
    run.add_argument("--workers", type=int, help="override the configured worker count")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run with the swept axis replaced")
    sweep.add_argument("config")
    sweep.add_argument("--field", required=True, choices=SWEEPABLE)
    sweep.add_argument("--values", help="comma-separated grid values; empty for an empty grid")
    sweep.add_argument("--start", type=float)
    sweep.add_argument("--stop", type=float)
    sweep.add_argument("--num", type=int)
    sweep.add_argument("--output")
    sweep.add_argument("--workers", type=int)
    sweep.set_defaults(func=cmd_sweep)

    validate = sub.add_parser("validate", help="schema check and physics lint")
    validate.add_argument("config")
    validate.set_defaults(func=cmd_validate)

    lst = sub.add_parser("list-experiments", help="list registered experiments")
    lst.add_argument("--write-defaults", metavar="DIR", help="write default configurations to DIR")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

    termspread run --config experiment.json [--out DIR] [--format csv|markdown]

Exit codes: 0 success, 1 configuration or input-data error, 2 computation
error (solver or selection failure).
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .errors import (
    ConfigError,
    CountNeverAttained,
    CoverageError,
    EmptyInput,
    GapInDates,
    HorizonTooLong,
    IoError,
    MalformedRow,
    MissingSeries,
    NotConverged,
    Separation,
    SingleClass,
    Singular,
    TermSpreadError,
)
from .experiment import ExperimentConfig, emit_all, run_experiment

_VALIDATION_ERRORS = (
    ConfigError,
    MissingSeries,
    GapInDates,
    MalformedRow,
    EmptyInput,
    CoverageError,
    HorizonTooLong,
)
_COMPUTATION_ERRORS = (
    NotConverged,
    Separation,
    Singular,
    SingleClass,
    CountNeverAttained,
    IoError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termspread",
        description="Yield-spread recession-forecasting experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configured experiment and emit outputs")
    run.add_argument("--config", required=True, help="path to the experiment JSON")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument(
        "--format",
        choices=("csv", "markdown"),
        default="csv",
        help="table file format",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command != "run":  # pragma: no cover - argparse enforces this
        return 1
    try:
        config = ExperimentConfig.from_json(args.config)
        out_dir = args.out if args.out is not None else config.output_dir
        result = run_experiment(config)
        written = emit_all(result, out_dir, fmt=args.format)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _COMPUTATION_ERRORS as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 2
    except TermSpreadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

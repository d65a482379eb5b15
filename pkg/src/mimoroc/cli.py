"""Command line entry point: ``mimoroc plan <scenario.toml>``."""

from __future__ import annotations

import argparse
import logging
import sys

from .cable_model import CalibrationError
from .report import run_sweep
from .scenario import ScenarioError, parse_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimoroc",
        description="Plan all-analog MIMO radio-over-copper fronthaul on LAN cables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    plan = sub.add_parser("plan", help="run a scenario sweep and write CSV tables")
    plan.add_argument("scenario", help="scenario TOML file")
    plan.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    plan.add_argument("--points", metavar="N", type=int,
                      help="number of lengths, evenly spaced over 25-300 m, "
                           "in antennas_vs_length.csv")
    plan.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    say = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    try:
        scenario = parse_scenario(args.scenario)
        if args.points is not None and args.points < 1:
            raise ScenarioError(f"--points must be >= 1, got {args.points}")
        results = run_sweep(scenario, args.out, args.points, progress=say)
    except (ScenarioError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if say:
        say(f"{len(results)} sweep points written")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

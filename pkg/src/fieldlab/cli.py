"""Command-line front end: one subcommand per run kind.

    fieldlab scaling --config scenario.yaml --out results/

Exit codes: 0 success, 1 configuration error, 2 convergence failure,
3 identity-check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import __version__
from .errors import FieldlabError, ParseError, ValidationError
from .runner import EXIT_CONFIG, run_scenario
from .scenario import RUN_KINDS, parse_scenario


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fieldlab",
        description="Retarded-potential field experiments driven by scenario files.")
    parser.add_argument("--version", action="version",
                        version=f"fieldlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(RUN_KINDS) + "}")
    for kind in RUN_KINDS:
        p = sub.add_parser(kind, help=f"run a '{kind}' scenario")
        p.add_argument("--config", required=True, metavar="PATH",
                       help="YAML scenario file")
        p.add_argument("--out", default=".", metavar="DIR",
                       help="directory for CSV/JSON output (default: .)")
        p.add_argument("--workers", type=int, default=None, metavar="N",
                       help="worker processes (default: scenario, then "
                            "FIELDLAB_WORKERS, then 1)")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="seed for randomized probe placement")
        p.add_argument("--quiet", action="store_true",
                       help="suppress the one-line status report")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        with open(args.config, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        scn = parse_scenario(text, default_run=args.command)
    except ValidationError as e:
        print("error: invalid scenario:", file=sys.stderr)
        for line in e.errors:
            print(f"  {line}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.workers is not None:
        if args.workers < 1:
            print("error: --workers must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        scn = dataclasses.replace(scn, workers=args.workers)
        scn.echo["workers"] = args.workers
    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be >= 0", file=sys.stderr)
            return EXIT_CONFIG
        scn = dataclasses.replace(scn, seed=args.seed)
        scn.echo["seed"] = args.seed

    try:
        result = run_scenario(scn, out_dir=args.out)
    except FieldlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if not args.quiet:
        status = {0: "ok", 2: "convergence failure", 3: "identity-check failure"}
        print(f"{scn.run_kind}: {status.get(result.exit_code, 'error')} "
              f"(exit {result.exit_code}); wrote {result.csv_path} "
              f"and {result.json_path}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())

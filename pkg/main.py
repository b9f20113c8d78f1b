#!/usr/bin/env python3
"""
Polynomially mixing Markov chains: simulation and bound verification

Usage:
    python main.py mixing --chain renewal --p 3 --n 10..500 --out mix.csv
    python main.py tails --chain renewal --p 3 --n 10000 --x-grid bandwidth:12 --trials 100000
    python main.py bounds fuk-constants --p 3
    python main.py verify --suite kac
    python main.py report --inputs mix.csv tails.csv --out report.jsonl
    python main.py --help
"""

import argparse
import logging
import sys
import warnings
from typing import List, Optional

from chains.errors import PolymixError, TruncationWarning, UnsupportedOperationError
from cli.commands import (
    BOUND_COMMANDS,
    EXIT_IO,
    EXIT_UNRESOLVABLE,
    EXIT_VALIDATION,
    ResolvabilityError,
    cmd_bounds,
    cmd_mixing,
    cmd_report,
    cmd_tails,
)
from cli.config import XGridSpec, load_config_file, merge_config, parse_n_list
from cli.verify import SUITES, VerifyOptions, cmd_verify

logger = logging.getLogger("polymix")


def add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by the data commands; every default is None so config files can fill them."""
    parser.add_argument("--config", metavar="FILE", help="JSON config file (flags override its values)")
    parser.add_argument("--chain", choices=["renewal", "harris", "doubling", "tower"], help="Chain to simulate")
    parser.add_argument("--p", type=float, help="Mixing exponent p > 1")
    parser.add_argument("--gamma", type=float, help="Harris observable exponent (default: 1)")
    parser.add_argument("--n", dest="n_list", type=parse_n_list,
                        help="Path lengths: N, N1,N2,..., A..B or A..B:K (K log-spaced points)")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials (>= 100)")
    parser.add_argument("--seed", type=int, help="Master seed (64-bit, default: 0)")
    parser.add_argument("--truncation-N", dest="truncation_N", type=int,
                        help="Renewal jump truncation (default: 1000000)")
    parser.add_argument("--workers", type=int, help="Worker processes (default: POLYMIX_WORKERS or cpu count)")
    parser.add_argument("--out", dest="output_path", metavar="PATH", help="Output file (default: standard output)")
    parser.add_argument("--verbose", action="store_true", help="Debug logging on standard error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulation and verification toolkit for polynomially mixing Markov chains",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py mixing --chain renewal --p 3 --n 10..500 --out mix.csv     # Exact H1 curve + rate fit
  python main.py mixing --chain doubling --n 1..20                          # Geometric decay, flagged
  python main.py tails --chain renewal --p 3 --n 10000 --x-grid bandwidth:12 --trials 100000 --seed 42
  python main.py tails --chain harris --p 2 --n 10000 --x-grid log:50:2000:8 --kappa 1
  python main.py bounds moddev --case p_lt_2 --n 100 --x 10 --p 1.5 --kappa 1
  python main.py bounds young --p 2 --x 1 --L ones:100 --kappa 1
  python main.py verify --suite quadrature                                  # 400 Beta/Gamma comparisons
  python main.py verify --suite scaling --chain renewal --p 3 --seed 7
  python main.py report --inputs mix.csv tails.csv --out report.jsonl
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mixing = sub.add_parser("mixing", help="H1 coefficient curve and its log-log rate fit")
    add_experiment_arguments(mixing)
    mixing.add_argument("--method", choices=["exact", "mc"], help="Kernel iteration or nested Monte Carlo")
    mixing.add_argument("--harris-bins", dest="harris_bins", type=int, help="Harris discretization cells")

    tails = sub.add_parser("tails", help="Monte-Carlo deviation probabilities on an x grid")
    add_experiment_arguments(tails)
    tails.add_argument("--x-grid", dest="x_grid", type=XGridSpec.parse,
                       help="bandwidth:K, linear:LO:HI:K or log:LO:HI:K")
    tails.add_argument("--alpha", type=float, help="Use x = x_scale * n^alpha instead of an x grid")
    tails.add_argument("--x-scale", dest="x_scale", type=float, help="Constant c of x = c n^alpha (default: 4)")
    tails.add_argument("--statistic", choices=["max_abs_partial_sum", "abs_sum", "excursion_sum"],
                       help="Statistic (default: max_abs_partial_sum)")
    tails.add_argument("--kappa", type=float, help="Gate constant (skips the pilot fit)")
    tails.add_argument("--no-gate", dest="gate", action="store_const", const=False,
                       help="Skip the resolvability gate")

    bounds = sub.add_parser("bounds", help="Evaluate one bound with its term breakdown")
    bounds.add_argument("op", help="Bound name: " + ", ".join(sorted(BOUND_COMMANDS)))
    bounds.add_argument("inputs", nargs=argparse.REMAINDER, help="Named inputs: --name value ...")

    verify = sub.add_parser("verify", help="Run a verification suite")
    verify.add_argument("--suite", required=True, choices=list(SUITES), help="Suite name")
    verify.add_argument("--config", metavar="FILE", help="JSON config file (flags override its values)")
    verify.add_argument("--chain", choices=["renewal", "harris", "doubling", "tower"], help="Chain (scaling suite)")
    verify.add_argument("--p", type=float, help="Override the suite's p")
    verify.add_argument("--seed", type=int, help="Master seed (default: 0)")
    verify.add_argument("--trials", type=int, help="Override every Monte-Carlo size in the suite")
    verify.add_argument("--alpha", type=float, help="Exponent of x = x_scale * n^alpha (scaling suite)")
    verify.add_argument("--x-scale", dest="x_scale", type=float, help="Constant of x = x_scale * n^alpha (scaling suite)")
    verify.add_argument("--truncation-N", dest="truncation_N", type=int, help="Renewal jump truncation")
    verify.add_argument("--workers", type=int, help="Worker processes")
    verify.add_argument("--verbose", action="store_true", help="Debug logging on standard error")

    report = sub.add_parser("report", help="Concatenate prior outputs into one JSON-lines file")
    report.add_argument("--inputs", nargs="+", required=True, metavar="FILE", help="CSV or JSON-lines files")
    report.add_argument("--out", dest="output_path", metavar="PATH", help="Output file (default: standard output)")
    report.add_argument("--verbose", action="store_true", help="Debug logging on standard error")
    return parser


def setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    logging.captureWarnings(True)
    warnings.simplefilter("default", TruncationWarning)


def overrides(args: argparse.Namespace, names: List[str]) -> dict:
    return {name: getattr(args, name, None) for name in names}


EXPERIMENT_FIELDS = [
    "chain", "p", "gamma", "n_list", "trials", "seed", "truncation_N", "workers", "output_path",
    "method", "harris_bins", "x_grid", "alpha", "x_scale", "statistic", "kappa", "gate",
]


def run(args: argparse.Namespace) -> int:
    if args.command == "bounds":
        return cmd_bounds(args.op, args.inputs)
    if args.command == "report":
        return cmd_report(args.inputs, args.output_path)

    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    if args.command == "verify":
        fields = ["chain", "p", "seed", "trials", "truncation_N", "workers"]
        values = {key: file_values[key] for key in fields if key in file_values}
        values.update({k: v for k, v in overrides(args, fields).items() if v is not None})
        extra = {key: file_values[key] for key in ("alpha", "x_scale") if key in file_values}
        extra.update({k: v for k, v in overrides(args, ["alpha", "x_scale"]).items() if v is not None})
        return cmd_verify(args.suite, VerifyOptions(extra=extra, **values))

    config = merge_config(file_values, overrides(args, EXPERIMENT_FIELDS))
    if args.command == "mixing":
        return cmd_mixing(config)
    return cmd_tails(config)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(getattr(args, "verbose", False))

    try:
        return run(args)
    except ResolvabilityError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_UNRESOLVABLE
    except (ValueError, LookupError, UnsupportedOperationError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_IO
    except PolymixError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

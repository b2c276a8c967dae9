"""Command line entry point.

Exit codes: 0 all checks passed, 2 a tolerance check failed or the numerics broke down,
3 the configuration (file, flags or values) is invalid. Outputs are staged in a
temporary directory next to --out and moved into place only when a run completes, so a
failed run never leaves partial files behind.
"""

from __future__ import annotations

import argparse
import shutil
import sys
import tempfile
from pathlib import Path
from typing import List, Optional

from ..errors import (ConfigurationError, DomainError, GridMismatchError, MissingPartError,
                      NoSolutionError, NumericalFailure, SingularityError, SizingError)
from . import checks
from .config import load_config
from .io import write_results
from .plotting import gnuplot_script, render_results

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 2, 3

COMMANDS = {
    "simulate-forward": ["simulate_forward"],
    "verify-colehopf": ["forward_crossval", "point_transform"],
    "verify-constraints": ["generalized_transform", "terminal_compatibility"],
    "feynman-kac": ["fk_forward", "fk_backward"],
    "fbsde-check": ["fbsde"],
    "controllability": ["controllability"],
    "price-claim": ["pricing"],
    "suite": list(checks.ALL_CHECKS),
}

RUNNERS = dict(checks.ALL_CHECKS, simulate_forward=checks.run_forward_simulation)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _levels(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"refine must be an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("refine must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochburgers", description="Stochastic Burgers / Cole-Hopf verification runs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, names in COMMANDS.items():
        p = sub.add_parser(name, help=f"run {', '.join(names)}")
        p.add_argument("--config", help="JSON file with overrides of the default configuration")
        p.add_argument("--seed", type=_u64, help="64-bit seed overriding the config")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--refine", type=_levels, help="refinement levels for every convergence sweep")
        p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
    p = sub.add_parser("plot-script", help="write a gnuplot script for the tables of an output directory")
    p.add_argument("--out", default="out", help="output directory produced by an earlier run")
    return parser


def _install(stage: Path, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for item in sorted(stage.iterdir()):
        target = out / item.name
        if target.is_dir():
            shutil.rmtree(target)
        elif target.exists():
            target.unlink()
        shutil.move(str(item), str(target))


def run_scenario(command: str, config: dict, out_dir, plots: bool = True, log=print) -> int:
    """Run the checks of one subcommand and write the output tree; returns the exit code."""
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=out.parent))
    try:
        results = []
        for name in COMMANDS[command]:
            res = RUNNERS[name](config)
            log(f"{'PASS' if res.passed else 'FAIL'} {name} ({res.runtime:.2f} s)")
            results.append(res)
        write_results(results, stage, config)
        if plots:
            render_results(results, stage)
        _install(stage, out)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return EXIT_OK if all(r.passed for r in results) else EXIT_TOLERANCE


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "plot-script":
        out = Path(args.out)
        if not (out / "series").is_dir():
            print(f"error: {out} holds no series/ directory; run a subcommand first", file=sys.stderr)
            return EXIT_CONFIG
        (out / "plots").mkdir(exist_ok=True)
        (out / "plots.gp").write_text(gnuplot_script(out))
        print(f"wrote {out / 'plots.gp'}")
        return EXIT_OK
    try:
        config = load_config(args.config, args.seed, args.refine)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code = run_scenario(args.command, config, args.out, plots=not args.no_plots)
    except (ConfigurationError, DomainError, SizingError, GridMismatchError, MissingPartError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, SingularityError, NoSolutionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    print(f"{'all checks passed' if code == EXIT_OK else 'some checks failed'}; outputs in {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())

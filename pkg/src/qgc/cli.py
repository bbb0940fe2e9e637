"""Command-line entry point.

Subcommands mirror the scenario modes one-to-one::

    qgc cubic          --config scenario.toml [--out DIR]
    qgc mpc            --config scenario.toml [--out DIR] [--open-loop]
    qgc compare        --config scenario.toml [--out DIR]
    qgc potential-grid --config scenario.toml [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 infeasible horizon.
"""

from __future__ import annotations

import argparse
import sys

from .config import parse_config
from .errors import HorizonInfeasible, ParseError, QgcError, ValidationError
from .runner import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_INFEASIBLE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgc",
        description="Smooth obstacle-avoiding state trajectories on the Bloch sphere",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("cubic", "mpc", "compare", "potential-grid"):
        p = sub.add_parser(mode, help=f"run a {mode} scenario")
        p.add_argument("--config", required=True, help="scenario file (TOML)")
        p.add_argument("--out", default=None, help="output directory override")
        if mode == "mpc":
            p.add_argument(
                "--open-loop",
                action="store_true",
                help="plan once over the whole task and replay without feedback",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, mode=args.mode)
    except (ParseError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        artifacts = run(cfg, open_loop=getattr(args, "open_loop", False), output_dir=args.out)
    except HorizonInfeasible as exc:
        print(f"infeasible horizon: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except QgcError as exc:
        print(f"{cfg.mode} scenario failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    for name, path in artifacts.tables.items():
        print(f"{name}: {path}")
    print(f"report: {artifacts.report_path}")
    if not artifacts.all_converged:
        print("solver did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())

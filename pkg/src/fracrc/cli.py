"""Command-line entry point for the experiment recipes.

Every subcommand reads a JSON config, writes tables and a manifest into the
output directory, and exits 0 on success, 2 on partial completion, 1 on a
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import harness

_RECIPES = {
    "generate": (harness.GenerateConfig, harness.run_generate),
    "lyap-grid": (harness.LyapGridConfig, harness.run_lyap_grid),
    "eta-sweep": (harness.EtaSweepConfig, harness.run_eta_sweep),
    "two-exp": (harness.MultiExponentConfig, harness.run_two_exponent),
    "three-exp": (harness.MultiExponentConfig, harness.run_three_exponent),
    "probe": (harness.ProbeRecipeConfig, harness.run_probe),
    "library-compare": (harness.LibraryCompareConfig, harness.run_library_compare),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracrc",
        description="Reservoir-computing experiments with fractional nonlinearities.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RECIPES:
        p = sub.add_parser(name, help=f"run the {name} recipe")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes (default 1)")
        p.add_argument("--resume", action="store_true",
                       help="reuse completed rows from a previous run")
    p = sub.add_parser("fwhm", help="peak-width table from an eta-sweep output")
    p.add_argument("--config", required=True,
                   help='JSON config: {"normalized_csv": path, "level": 0.75}')
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1

    if args.command == "fwhm":
        try:
            result = harness.run_fwhm(raw["normalized_csv"], args.out,
                                      raw.get("level", 0.75))
        except (KeyError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {result.tables[0]}")
        return 0

    config_cls, runner = _RECIPES[args.command]
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = config_cls.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return 1

    try:
        result = runner(cfg, args.out, jobs=args.jobs, resume=args.resume)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for table in result.tables:
        print(f"wrote {table}")
    print(f"cells: {result.computed_cells} computed, "
          f"{result.reused_cells} reused; status: {result.status}")
    return 0 if result.status == "complete" else 2


if __name__ == "__main__":
    sys.exit(main())

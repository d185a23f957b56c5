"""Batch command-line front end.

Subcommands: ``run`` executes an experiment and writes the result tables,
``validate`` checks a config without running, ``presets`` prints the
built-in policy and market presets, and ``plotdata`` reshapes a completed
run into tidy plot CSVs.  Exit codes: 0 success, 2 configuration error,
3 runtime error.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .cohort import MARKET_STRUCTURES
from .config import ConfigError, desk_profile_overrides, load_config
from .output import OutputError, PLOT_KINDS, emit_plot_data, run
from .rules import policy_presets

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="experiment config file (YAML); defaults apply if omitted")
    parser.add_argument("--seed", type=int, help="override the experiment seed")
    parser.add_argument("--scenarios", type=int, help="override the number of economic scenarios")
    parser.add_argument("--households", type=int, help="override the cohort size")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument(
        "--profile",
        choices=["desk"],
        help="desk profile: 1,000 households and 100 scenarios for quick runs",
    )


def _overrides_from_args(args) -> dict:
    overrides: dict = {}
    if args.profile == "desk":
        overrides = desk_profile_overrides()
    if args.seed is not None:
        overrides["seed"] = args.seed
    cohort = overrides.setdefault("cohort", {})
    if args.scenarios is not None:
        cohort["n_scenarios"] = args.scenarios
    if args.households is not None:
        cohort["n_households"] = args.households
    if not cohort:
        overrides.pop("cohort")
    if args.out is not None:
        overrides["outputs"] = {"directory": args.out}
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="housesim",
        description="Monte Carlo simulator of housing-deposit policies for a renter cohort",
    )
    parser.add_argument("--version", action="version", version=f"housesim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment and write result tables")
    _add_config_flags(p_run)
    p_run.add_argument("--jobs", type=int, default=1, help="parallel scenario workers")

    p_val = sub.add_parser("validate", help="validate a config file and echo the resolved form")
    _add_config_flags(p_val)

    sub.add_parser("presets", help="print the built-in policy and market presets")

    p_plot = sub.add_parser("plotdata", help="emit tidy plot CSVs from a completed run")
    p_plot.add_argument("--out", required=True, help="output directory of a completed run")
    p_plot.add_argument("--kind", required=True, choices=PLOT_KINDS)

    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config, _overrides_from_args(args))

    def progress(market, done, total):
        print(f"[{market}] {done}/{total} scenarios", file=sys.stderr)

    result = run(config, jobs=max(1, args.jobs), progress=progress)
    print(f"experiment {result.experiment_hash} written to {config.output_dir}")
    for market, mr in result.markets.items():
        for name, outcome in mr.policies.items():
            d = outcome.diagnostics
            print(
                f"  {market}/{name}: purchases={d['purchases']} defaults={d['defaults']} "
                f"liquidations={d['liquidations']}"
            )
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = load_config(args.config, _overrides_from_args(args))
    print(config.echo_yaml(), end="")
    print(f"# ok: experiment hash {config.experiment_hash}", file=sys.stderr)
    return EXIT_OK


def _cmd_presets() -> int:
    print("policies:")
    for p in policy_presets():
        cap = "inf" if p.withdrawal_cap == float("inf") else f"{p.withdrawal_cap:,.0f}"
        marker = " (benchmark)" if p.is_benchmark else ""
        print(
            f"  {p.name}{marker}: deposit={p.deposit_rate:.0%} buffer={p.buffer_rate:.0%} "
            f"min_savings={p.min_savings_rate:.0%} max_withdrawal={p.max_withdrawal_share:.0%} "
            f"cap={cap} access={p.access_rule}"
        )
    print("markets:")
    for market in MARKET_STRUCTURES:
        print(f"  {market}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "presets":
            return _cmd_presets()
        if args.command == "plotdata":
            path = emit_plot_data(args.out, args.kind)
            print(path)
            return EXIT_OK
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OutputError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

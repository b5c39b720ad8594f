"""Command-line entry point.

    hybridsim run <config.toml> [--seed N] [--until MIN] [--scheduler MODE]
                                [--snapshots T1,T2,...] [--out-dir DIR]
    hybridsim demo <heater|tank|system> [--seed N] [--scheduler MODE]
                                        [--out-dir DIR]

Each run writes events.jsonl, stats.json, the per-entity CSV series and any
requested grid snapshots into the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, apply_overrides, load_config
from .kernel import DivergenceError
from .scenario import EVENT_STEPPED, LOOKAHEAD, MINUTE, demo_config, run_scenario

DEMO_NAMES = ("heater", "tank", "system")


def _parse_snapshots(spec: str) -> tuple[float, ...]:
    try:
        minutes = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--snapshots expects comma-separated minutes, got {spec!r}")
    if any(m < 0 for m in minutes):
        raise ConfigError("--snapshots times must be >= 0 minutes")
    return tuple(m * MINUTE for m in minutes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridsim",
        description="Deterministic mixed discrete-continuous simulation runs.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario from a TOML config")
    run_p.add_argument("config", type=Path, help="scenario config file")
    run_p.add_argument("--seed", type=int, default=None, help="override [run] seed")
    run_p.add_argument("--until", type=float, default=None, metavar="MIN",
                       help="override run length, in minutes")
    run_p.add_argument("--scheduler", choices=(EVENT_STEPPED, LOOKAHEAD),
                       default=None, help="time-advancement scheme")
    run_p.add_argument("--snapshots", default=None, metavar="T1,T2,...",
                       help="grid snapshot times, in minutes")
    run_p.add_argument("--out-dir", type=Path, default=Path("out"))

    demo_p = sub.add_parser("demo", help="run a built-in validation scenario")
    demo_p.add_argument("name", choices=DEMO_NAMES)
    demo_p.add_argument("--seed", type=int, default=None)
    demo_p.add_argument("--scheduler", choices=(EVENT_STEPPED, LOOKAHEAD),
                        default=EVENT_STEPPED)
    demo_p.add_argument("--out-dir", type=Path, default=None)
    return parser


def cmd_run(args) -> int:
    config = load_config(args.config)
    snapshots = _parse_snapshots(args.snapshots) if args.snapshots else None
    config = apply_overrides(config, seed=args.seed, until_min=args.until,
                             scheduler=args.scheduler, snapshot_times=snapshots)
    run = run_scenario(config, out_dir=args.out_dir)
    print(f"run complete: t={run.engine.now:g}s, "
          f"{run.engine.events_executed} events -> {args.out_dir}")
    return 0


def cmd_demo(args) -> int:
    out_dir = args.out_dir if args.out_dir is not None else Path(f"out_{args.name}")
    config = demo_config(args.name, seed=args.seed, scheduler=args.scheduler)
    run = run_scenario(config, out_dir=out_dir)
    print(f"demo '{args.name}' complete: t={run.engine.now:g}s, "
          f"{run.engine.events_executed} events -> {out_dir}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_demo(args)
    except ConfigError as exc:
        print(f"hybridsim: config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"hybridsim: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points: run, bench, validate.

Exit codes: 0 success, 2 configuration/validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import run_benchmark, write_benchmark_csv
from .config import ScenarioError, load_scenario
from .logio import write_log
from .sim import SimulationError, run_scenario

__all__ = ["main", "console_main"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfcbf",
        description="Mean-field control barrier safety filters for swarms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write its logs")
    run_p.add_argument("config", help="scenario JSON file")
    run_p.add_argument("--out-dir", default=".", help="directory for CSV output")

    bench_p = sub.add_parser("bench", help="scaling benchmark over swarm sizes")
    bench_p.add_argument("config", help="benchmark template JSON file")
    bench_p.add_argument(
        "--sizes", default="2,10,50,100,200", help="comma-separated ascending swarm sizes"
    )
    bench_p.add_argument("--out-dir", default=".", help="directory for benchmark.csv")

    val_p = sub.add_parser("validate", help="validate a scenario file")
    val_p.add_argument("config", help="scenario JSON file")
    return parser


def _load(path: str):
    try:
        return load_scenario(path), None
    except ScenarioError as exc:
        return None, exc.errors
    except OSError as exc:
        return None, [str(exc)]


def _cmd_run(args) -> int:
    cfg, errors = _load(args.config)
    if cfg is None:
        for line in errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    out_dir = Path(args.out_dir)
    try:
        log = run_scenario(cfg)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        try:
            write_log(exc.log, out_dir)
            print(f"partial log written to {out_dir}", file=sys.stderr)
        except OSError as io_exc:
            print(f"error: {io_exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        write_log(log, out_dir)
        with open(out_dir / "config_echo.json", "w", encoding="utf-8") as fh:
            json.dump(log.scenario, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    statuses = log.statuses()
    print(
        f"{len(log.records)} steps, min H = {log.min_h():.6g}, "
        f"projected = {statuses.count('projected')}, "
        f"infeasible = {statuses.count('infeasible')}"
    )
    print(f"logs written to {out_dir}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg, errors = _load(args.config)
    if cfg is None:
        for line in errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    except ValueError:
        print("error: --sizes expects comma-separated integers", file=sys.stderr)
        return EXIT_VALIDATION
    if not sizes or sorted(sizes) != sizes or min(sizes) < 1:
        print("error: --sizes must be ascending positive integers", file=sys.stderr)
        return EXIT_VALIDATION
    out_dir = Path(args.out_dir)
    try:
        rows = run_benchmark(cfg, sizes)
        write_benchmark_csv(rows, out_dir / "benchmark.csv")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for row in rows:
        base = "timeout" if row.baseline_timeout else f"{row.baseline_step_ms:.3f} ms"
        print(
            f"n={row.n:>4}  mf_rows=1  baseline_rows={row.baseline_rows:>6}  "
            f"mf={row.mf_step_ms:.3f} ms  baseline={base}"
        )
    print(f"benchmark table written to {out_dir / 'benchmark.csv'}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg, errors = _load(args.config)
    if cfg is None:
        for line in errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    n = cfg.agent_count
    print(f"OK: {cfg.mode} scenario, {n} agents, {cfg.adversary_initial.shape[0]} adversary particles")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "bench":
        return _cmd_bench(args)
    return _cmd_validate(args)


def console_main() -> None:
    sys.exit(main())

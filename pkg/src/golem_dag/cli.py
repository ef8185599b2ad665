"""Command-line entry point: ``golem-bench run | run-real | emit``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import bench


def _split(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--methods", type=_split, help="comma-separated method names")
    p.add_argument("--iterations", type=int, help="Adam iterations per fit")
    p.add_argument("--full", action="store_true", help=f"use {bench.FULL_ITERATIONS} iterations")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--omega", type=float, help="threshold for post-processing")
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int, help=f"parallel fits (default: ${bench.WORKERS_ENV} or 1)")


def _apply_overrides(cfg: bench.ExperimentConfig, args) -> bench.ExperimentConfig:
    changes = {}
    for flag, name in (
        ("methods", "methods"),
        ("iterations", "iterations"),
        ("learning_rate", "learning_rate"),
        ("omega", "omega"),
        ("output_dir", "output_dir"),
        ("n_seeds", "n_seeds"),
        ("base_seed", "base_seed"),
        ("n", "n"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            changes[name] = val
    if args.full:
        changes["iterations"] = bench.FULL_ITERATIONS
    graph_changes = {k: getattr(args, k) for k in ("d", "k") if getattr(args, k, None) is not None}
    if graph_changes:
        changes["graph"] = replace(cfg.graph, **graph_changes)
    return replace(cfg, **changes)


def _summary(record: bench.RunRecord) -> None:
    for method, stats in record.aggregates.items():
        parts = []
        for m in ("shd_norm", "shd_c_norm", "sid_norm", "tpr", "n_edges_est", "shd"):
            st = stats[m]
            if st["mean"] is not None:
                parts.append(f"{m}={st['mean']:.3f}±{st['stderr']:.3f}")
        print(f"{method:16s} n={stats['tpr']['n']:<3d} " + " ".join(parts))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="golem-bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a simulated experiment grid from a config file")
    run.add_argument("--config", required=True, help="JSON or YAML ExperimentConfig")
    _add_fit_flags(run)
    run.add_argument("--n-seeds", type=int)
    run.add_argument("--base-seed", type=int)
    run.add_argument("--n", type=int, help="sample size")
    run.add_argument("--d", type=int, help="node count")
    run.add_argument("--k", type=int, help="edge-density multiplier")

    real = sub.add_parser("run-real", help="fit methods on a real data CSV")
    real.add_argument("--data", required=True, help="n x d numeric CSV")
    real.add_argument("--truth", required=True, help="edge list source,target[,weight]")
    real.add_argument("--config", help="optional config for optimizer settings")
    _add_fit_flags(real)

    emit = sub.add_parser("emit", help="write long and aggregate tables for a finished run")
    emit.add_argument("--record", required=True, help="run directory containing record.json")
    emit.add_argument("--format", choices=("csv", "json"), default="csv")
    emit.add_argument("--out", help="output directory (default: the record directory)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "emit":
        record = bench.load_record(args.record)
        for path in bench.emit_tables(record, args.format, args.out or args.record):
            print(path)
        return 2 if record.partial else 0

    if args.command == "run":
        cfg = _apply_overrides(bench.load_config(args.config), args)
        record = bench.run_experiment(cfg, workers=args.workers)
    else:
        cfg = bench.load_config(args.config) if args.config else bench.ExperimentConfig(output_dir="runs/real")
        cfg = _apply_overrides(cfg, args)
        methods = cfg.methods if args.methods or args.config else ("GOLEM-NV", "GOLEM-EV", "NOTEARS-L1")
        record = bench.run_real_data(args.data, args.truth, methods, cfg)
    _summary(record)
    print(f"record written to {cfg.output_dir}/record.json")
    return 2 if record.partial else 0


if __name__ == "__main__":
    sys.exit(main())

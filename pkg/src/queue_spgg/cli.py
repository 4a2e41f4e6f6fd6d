"""Command line entry point: ``queue-spgg {run,sweep,analytics,validate-queue}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from . import analytics, experiment
from .config import SimConfig, SweepSpec, config_from_mapping, load_config, parse_axis
from .errors import SpggError
from .queueing import QueueParams, draw_round_schedule
from .seeding import generator

log = logging.getLogger("queue_spgg")

_OVERRIDES = {
    "lam": "lam", "mu": "mu", "r": "r", "pr": "p_r", "kappa": "kappa", "seed": "seed",
    "steps": "max_steps", "replicates": "replicates", "out_dir": "out_dir",
}


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML config file")
    p.add_argument("--lambda", dest="lam", type=float, help="arrival rate")
    p.add_argument("--mu", type=float, help="service rate")
    p.add_argument("--r", type=float, help="enhancement factor")
    p.add_argument("--pr", type=float, help="probability of picking the top-reputation neighbor")
    p.add_argument("--kappa", type=float, help="Fermi noise")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--steps", type=int, help="maximum Monte Carlo steps")
    p.add_argument("--replicates", type=int)
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--workers", type=int, help=f"worker processes (default: ${experiment.WORKERS_ENV} or CPU count)")


def _config_from_args(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else config_from_mapping({})
    changes = {}
    for flag, attr in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            changes[attr] = value
    steps = changes.get("max_steps")
    if steps and cfg.tail_window > steps:
        changes["tail_window"] = steps
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    summary = experiment.run_replicates(cfg, workers=args.workers)
    paths = experiment.emit_outputs(summary)
    for i, run in enumerate(summary.runs):
        exit_note = f" absorbed at step {run.exit_step}" if run.absorbed else ""
        print(f"replicate {i}: rho_c={run.summary_rho_c:.6f}{exit_note}")
    print(f"pooled rho_c={summary.mean:.6f} std={summary.std:.6f} ({len(paths)} files in {cfg.out_dir})")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    if args.axis1:
        sweep = SweepSpec(axis1=parse_axis(args.axis1), axis2=parse_axis(args.axis2) if args.axis2 else None,
                          replicates=args.cell_replicates)
        cfg = cfg.replace(sweep=sweep)
    elif cfg.sweep is None:
        raise SpggError("no sweep axes: pass --axis1 or add a [sweep] table to the config")
    result = experiment.run_sweep(cfg, cfg.sweep, workers=args.workers)
    experiment.emit_sweep(result, cfg.out_dir)
    sys.stdout.write(experiment.sweep_text(result))
    return 0


def cmd_analytics(args) -> int:
    lam, mu, n = args.lam, args.mu, args.N
    p = analytics.stationary_distribution(lam, mu, n)
    res = analytics.analyze(lam, mu, n)
    group = args.group_size
    psi = analytics.total_enhancement(args.r, args.nc, lam, mu, n, group_size=group) if args.r else None
    if args.table:
        text = experiment.csv_text(("n", "P_n"), enumerate(p.tolist()))
        experiment.atomic_write(args.table, text)
    else:
        sys.stdout.write(experiment.csv_text(("n", "P_n"), enumerate(p.tolist())))
    row = (lam, mu, n, res.rho, res.L, res.ET, psi.psi if psi else None, psi.psi_limit if psi else None)
    sys.stdout.write(experiment.csv_text(("lambda", "mu", "N", "rho", "L", "ET", "psi", "psi_limit"), [row]))
    return 0


def cmd_validate_queue(args) -> int:
    params = QueueParams(args.lam, args.mu)
    rng = generator(args.seed)
    schedules = [draw_round_schedule(params, args.n, rng) for _ in range(args.rounds)]
    stats = analytics.empirical_queue_stats(schedules)
    et_finite = analytics.mean_sojourn(args.lam, args.mu, args.n)
    et_limit = 1.0 / (args.mu - args.lam) if args.mu > args.lam else None
    header = ("lambda", "mu", "n", "rounds", "mean_T", "mean_W", "mean_S", "time_avg_L", "throughput",
              "little_L", "ET_closed_form", "ET_limit")
    row = (args.lam, args.mu, args.n, args.rounds, stats.mean_sojourn, stats.mean_wait, stats.mean_service,
           stats.time_avg_in_system, stats.throughput, stats.throughput * stats.mean_sojourn, et_finite, et_limit)
    sys.stdout.write(experiment.csv_text(header, [row]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="queue-spgg",
                                     description="Spatial public goods game driven by an M/M/1 queue.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run or replicate batch")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="1-D or 2-D parameter sweep")
    _add_sim_flags(p)
    p.add_argument("--axis1", help="name=v1,v2,... or name=start:stop:step")
    p.add_argument("--axis2")
    p.add_argument("--cell-replicates", type=int, dest="cell_replicates")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analytics", help="closed-form queue tables")
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--N", type=int, default=2500)
    p.add_argument("--r", type=float, help="enhancement factor for the psi columns")
    p.add_argument("--nc", type=int, default=0, help="number of cooperators for psi")
    p.add_argument("--group-size", type=float, default=analytics.LATTICE_GROUP_SIZE)
    p.add_argument("--table", type=Path, help="write the n,P_n table here instead of stdout")
    p.set_defaults(func=cmd_analytics)

    p = sub.add_parser("validate-queue", help="empirical queue statistics against closed forms")
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--mu", type=float, default=3.0)
    p.add_argument("--n", type=int, default=2500)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate_queue)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SpggError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

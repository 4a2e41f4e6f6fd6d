"""Replicates, parameter sweeps and output files."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import evolution
from .config import SimConfig, SweepSpec
from .errors import SpggError
from .queueing import (SCHEDULE_TRACE_HEADER, TRIGGER_TRACE_HEADER, GameTrigger, NEIGHBOR_CENTERED,
                       SELF_CENTERED, schedule_rows, trigger_rows)
from .seeding import RunStreams
from .topology import LATTICE, NetworkTopology, make_lattice

log = logging.getLogger(__name__)

WORKERS_ENV = "QUEUE_SPGG_WORKERS"


def worker_count(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SpggError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@lru_cache(maxsize=8)
def _lattice(side: int) -> NetworkTopology:
    return make_lattice(side)


def build_topology(config: SimConfig, replicate: int = 0) -> NetworkTopology:
    if config.topology.kind == LATTICE:
        return _lattice(config.topology.side)
    return config.topology.build(RunStreams(config.seed, replicate).topology())


def run_single(config: SimConfig, replicate: int = 0) -> evolution.RunResult:
    streams = RunStreams(config.seed, replicate)
    topology = build_topology(config, replicate)
    return evolution.run(topology, config.queue_params(), config.game_params(),
                         config.evolution_params(), streams, config.capture.for_run())


def _task(args):
    config, replicate = args
    return run_single(config, replicate)


def _map_runs(tasks: Sequence[tuple[SimConfig, int]], workers: int) -> list[evolution.RunResult]:
    if workers <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        # map preserves task order, so results are keyed by position
        return list(pool.map(_task, tasks))


@dataclass(eq=False)
class ReplicateSummary:
    config: SimConfig
    runs: list[evolution.RunResult]

    @property
    def values(self) -> np.ndarray:
        return np.array([r.summary_rho_c for r in self.runs])

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / len(self.runs)

    @property
    def std(self) -> float:
        return float(np.std(self.values))


def run_replicates(config: SimConfig, workers: Optional[int] = None) -> ReplicateSummary:
    tasks = [(config, rep) for rep in range(config.replicates)]
    runs = _map_runs(tasks, worker_count(workers))
    return ReplicateSummary(config=config, runs=runs)


@dataclass(frozen=True)
class SweepCell:
    axis1_value: float
    axis2_value: Optional[float]
    mean: float
    std: float
    values: tuple[float, ...]


@dataclass(eq=False)
class SweepResult:
    sweep: SweepSpec
    cells: list[SweepCell]

    @property
    def shape(self) -> tuple[int, int]:
        return self.sweep.shape

    def grid(self) -> np.ndarray:
        return np.array([c.mean for c in self.cells]).reshape(self.shape)


def sweep_configs(base: SimConfig, sweep: SweepSpec) -> list[SimConfig]:
    out = []
    reps = sweep.replicates or base.replicates
    a2 = sweep.axis2.values if sweep.axis2 else (None,)
    for v1 in sweep.axis1.values:
        for v2 in a2:
            cfg = base.with_param(sweep.axis1.name, v1)
            if v2 is not None:
                cfg = cfg.with_param(sweep.axis2.name, v2)
            out.append(cfg.replace(replicates=reps, sweep=None))
    return out


def run_sweep(base: SimConfig, sweep: SweepSpec, workers: Optional[int] = None) -> SweepResult:
    configs = sweep_configs(base, sweep)
    tasks = [(cfg, rep) for cfg in configs for rep in range(cfg.replicates)]
    runs = _map_runs(tasks, worker_count(workers))
    cells, pos = [], 0
    a2 = sweep.axis2.values if sweep.axis2 else (None,)
    grid = [(v1, v2) for v1 in sweep.axis1.values for v2 in a2]
    for cfg, (v1, v2) in zip(configs, grid):
        vals = tuple(r.summary_rho_c for r in runs[pos:pos + cfg.replicates])
        pos += cfg.replicates
        cells.append(SweepCell(axis1_value=v1, axis2_value=v2, mean=math.fsum(vals) / len(vals),
                               std=float(np.std(vals)), values=vals))
        log.info("cell %s=%s%s: mean rho_c %.4f", sweep.axis1.name, v1,
                 f" {sweep.axis2.name}={v2}" if v2 is not None else "", cells[-1].mean)
    return SweepResult(sweep=sweep, cells=cells)


# ---------------------------------------------------------------- output

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise SpggError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def timeseries_text(run: evolution.RunResult) -> str:
    rows = zip(range(run.steps_run), run.rho_c, run.n_c, run.mean_payoff)
    return csv_text(("step", "rho_c", "n_c", "mean_payoff"), rows)


def pgm_text(strategy: np.ndarray, side: int) -> str:
    """Plain PGM, one pixel per node: 1 cooperator, 0 defector."""
    grid = np.asarray(strategy, dtype=np.int64).reshape(side, side)
    lines = ["P2", f"{side} {side}", "1"]
    lines += [" ".join(str(v) for v in row) for row in grid]
    return "\n".join(lines) + "\n"


def snapshot_csv_text(strategy: np.ndarray) -> str:
    return csv_text(("node", "strategy"), ((i, "C" if s else "D") for i, s in enumerate(strategy)))


def histogram_text(n_c: np.ndarray, window: int) -> str:
    tail = n_c[-window:] if window else n_c
    values, counts = np.unique(tail, return_counts=True)
    return csv_text(("n_c", "count"), zip(values.tolist(), counts.tolist()))


def summary_text(summary: ReplicateSummary) -> str:
    rows = [(i, r.summary_rho_c, None, r.absorbed, r.exit_step, r.steps_run)
            for i, r in enumerate(summary.runs)]
    rows.append(("pooled", summary.mean, summary.std, None, None, None))
    return csv_text(("replicate", "rho_c", "std_rho_c", "absorbed", "exit_step", "steps_run"), rows)


def _triggers_from_arrays(arrays) -> list[GameTrigger]:
    focal, by = arrays
    return [GameTrigger(g, int(f), int(b), SELF_CENTERED if f == b else NEIGHBOR_CENTERED)
            for g, (f, b) in enumerate(zip(focal, by))]


def emit_outputs(summary: ReplicateSummary, out_dir=None) -> list[Path]:
    """Write the summary plus whatever the config's capture section asks for."""
    config = summary.config
    out = Path(out_dir if out_dir is not None else config.out_dir)
    cap = config.capture
    written = [atomic_write(out / "summary.csv", summary_text(summary))]
    lattice_side = config.topology.side if config.topology.kind == LATTICE else None
    for rep, run in enumerate(summary.runs):
        tag = f"r{rep:02d}"
        if cap.timeseries:
            written.append(atomic_write(out / f"timeseries_{tag}.csv", timeseries_text(run)))
        for t, strat in run.snapshots.items():
            if lattice_side:
                written.append(atomic_write(out / f"snapshot_{tag}_t{t}.pgm", pgm_text(strat, lattice_side)))
            else:
                written.append(atomic_write(out / f"snapshot_{tag}_t{t}.csv", snapshot_csv_text(strat)))
        if run.payoffs:
            rows = ((t, i, "C" if s else "D", p)
                    for t, (strat, pay) in sorted(run.payoffs.items())
                    for i, (s, p) in enumerate(zip(strat, pay)))
            written.append(atomic_write(out / f"payoffs_{tag}.csv",
                                        csv_text(("round", "node", "strategy", "payoff"), rows)))
        if run.schedules:
            rows = (row for t, sch in sorted(run.schedules.items()) for row in schedule_rows(t, sch))
            written.append(atomic_write(out / f"queue_{tag}.csv", csv_text(SCHEDULE_TRACE_HEADER, rows)))
            rows = (row for t, arr in sorted(run.triggers.items())
                    for row in trigger_rows(t, _triggers_from_arrays(arr)))
            written.append(atomic_write(out / f"triggers_{tag}.csv", csv_text(TRIGGER_TRACE_HEADER, rows)))
        if cap.histogram_window:
            written.append(atomic_write(out / f"coop_hist_{tag}.csv",
                                        histogram_text(run.n_c, cap.histogram_window)))
    if cap.edge_list:
        topo = build_topology(config, 0)
        written.append(atomic_write(out / "edges.csv", "".join(f"{u},{v}\n" for u, v in topo.edges())))
    return written


def sweep_text(result: SweepResult) -> str:
    """Cell table; axis2 is left empty for 1-D sweeps."""
    rows = ((c.axis1_value, c.axis2_value, c.mean, c.std) for c in result.cells)
    return csv_text(("axis1", "axis2", "mean_rho_c", "std_rho_c"), rows)


def sweep_replicates_text(result: SweepResult) -> str:
    rows = ((c.axis1_value, c.axis2_value, i, v) for c in result.cells for i, v in enumerate(c.values))
    return csv_text(("axis1", "axis2", "replicate", "rho_c"), rows)


def sweep_axes_text(result: SweepResult) -> str:
    sw = result.sweep
    rows = [("axis1", sw.axis1.name, len(sw.axis1.values))]
    if sw.axis2:
        rows.append(("axis2", sw.axis2.name, len(sw.axis2.values)))
    return csv_text(("axis", "parameter", "count"), rows)


def emit_sweep(result: SweepResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    return [atomic_write(out / "sweep.csv", sweep_text(result)),
            atomic_write(out / "sweep_replicates.csv", sweep_replicates_text(result)),
            atomic_write(out / "sweep_axes.csv", sweep_axes_text(result))]

import numpy as np
import pytest

from queue_spgg import experiment
from queue_spgg.cli import main
from queue_spgg.config import Axis, CaptureSpec, SimConfig, SweepSpec, TopologySpec
from queue_spgg.errors import SpggError

SMALL = SimConfig(topology=TopologySpec(side=10), r=3.0, mu=2.4, max_steps=40, tail_window=10, replicates=3)


def test_replicates_are_deterministic_and_distinct():
    a = experiment.run_replicates(SMALL, workers=1)
    b = experiment.run_replicates(SMALL, workers=1)
    assert a.values.tolist() == b.values.tolist()
    assert len({tuple(r.rho_c.tolist()) for r in a.runs}) == 3
    assert a.mean == pytest.approx(a.values.mean())


def test_single_replicate():
    s = experiment.run_replicates(SMALL.replace(replicates=1), workers=1)
    assert len(s.runs) == 1 and s.std == 0.0


def test_workers_do_not_change_results():
    a = experiment.run_replicates(SMALL, workers=1)
    b = experiment.run_replicates(SMALL, workers=2)
    for x, y in zip(a.runs, b.runs):
        assert np.array_equal(x.rho_c, y.rho_c)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv(experiment.WORKERS_ENV, "3")
    assert experiment.worker_count() == 3
    assert experiment.worker_count(1) == 1
    monkeypatch.setenv(experiment.WORKERS_ENV, "many")
    with pytest.raises(SpggError):
        experiment.worker_count()


def test_one_cell_sweep_equals_replicate_batch():
    sweep = SweepSpec(axis1=Axis("r", (3.0,)))
    res = experiment.run_sweep(SMALL, sweep, workers=1)
    direct = experiment.run_replicates(SMALL, workers=1)
    assert res.cells[0].values == tuple(direct.values.tolist())
    assert res.cells[0].mean == direct.mean


def test_two_axis_sweep_layout(tmp_path):
    sweep = SweepSpec(axis1=Axis("r", (1.0, 3.0, 5.0)), axis2=Axis("mu", (2.4, 3.0)), replicates=2)
    res = experiment.run_sweep(SMALL, sweep, workers=1)
    assert len(res.cells) == 6 and res.grid().shape == (3, 2)
    assert [(c.axis1_value, c.axis2_value) for c in res.cells][:2] == [(1.0, 2.4), (1.0, 3.0)]
    experiment.emit_sweep(res, tmp_path)
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "axis1,axis2,mean_rho_c,std_rho_c" and len(lines) == 7
    assert lines[1].startswith("1.0,2.4,")
    means = [float(line.split(",")[2]) for line in lines[1:]]
    assert all(0.0 <= m <= 1.0 for m in means)
    assert len((tmp_path / "sweep_replicates.csv").read_text().splitlines()) == 13
    assert (tmp_path / "sweep_axes.csv").read_text().splitlines()[1:] == ["axis1,r,3", "axis2,mu,2"]


def test_one_axis_sweep_leaves_axis2_empty(tmp_path):
    res = experiment.run_sweep(SMALL, SweepSpec(axis1=Axis("p_r", (0.0, 0.5)), replicates=1), workers=1)
    lines = experiment.sweep_text(res).splitlines()
    assert len(lines) == 3 and lines[1].startswith("0.0,,")


def test_default_outputs_only_summary(tmp_path):
    s = experiment.run_replicates(SMALL, workers=1)
    paths = experiment.emit_outputs(s, tmp_path)
    assert [p.name for p in paths] == ["summary.csv"]
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert lines[0] == "replicate,rho_c,std_rho_c,absorbed,exit_step,steps_run"
    assert lines[-1].startswith("pooled,")


def test_capture_outputs(tmp_path):
    cap = CaptureSpec(timeseries=True, snapshots=(0, 5), payoff_steps=(0,), queue_steps=(0,),
                      histogram_window=10, edge_list=True)
    cfg = SimConfig(topology=TopologySpec(side=50), r=3.0, max_steps=20, tail_window=10, replicates=1,
                    capture=cap)
    s = experiment.run_replicates(cfg, workers=1)
    experiment.emit_outputs(s, tmp_path)
    ts = (tmp_path / "timeseries_r00.csv").read_text().splitlines()
    assert ts[0] == "step,rho_c,n_c,mean_payoff" and len(ts) == s.runs[0].steps_run + 1
    pgm = (tmp_path / "snapshot_r00_t0.pgm").read_text().split()
    assert pgm[:4] == ["P2", "50", "50", "1"]
    pixels = np.array(pgm[4:], dtype=int)
    assert len(pixels) == 2500 and abs(pixels.mean() - 0.5) < 0.05
    assert len((tmp_path / "payoffs_r00.csv").read_text().splitlines()) == 2501
    assert len((tmp_path / "queue_r00.csv").read_text().splitlines()) == 2501
    assert len((tmp_path / "triggers_r00.csv").read_text().splitlines()) == 2501
    assert (tmp_path / "coop_hist_r00.csv").exists()
    assert len((tmp_path / "edges.csv").read_text().splitlines()) == 5000


def test_small_world_snapshot_is_csv(tmp_path):
    cfg = SimConfig(topology=TopologySpec(kind="small_world", n=60), max_steps=3, tail_window=1, replicates=1,
                    capture=CaptureSpec(snapshots=(0,)))
    experiment.emit_outputs(experiment.run_replicates(cfg, workers=1), tmp_path)
    assert (tmp_path / "snapshot_r00_t0.csv").read_text().startswith("node,strategy\n")


def test_atomic_write_reports_errors(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(SpggError):
        experiment.atomic_write(blocker / "sub" / "out.csv", "data")


def test_float_format_round_trips():
    assert experiment._fmt(0.1 + 0.2) == "0.30000000000000004"
    assert experiment._fmt(True) == "1"


# ---------------------------------------------------------------- CLI

def test_cli_run(tmp_path, capsys):
    code = main(["run", "--r", "3", "--steps", "20", "--replicates", "2", "--out-dir", str(tmp_path),
                 "--workers", "1"])
    assert code == 0
    assert "pooled rho_c=" in capsys.readouterr().out
    assert (tmp_path / "summary.csv").exists()


def test_cli_run_with_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'side = 10\nmax_steps = 15\nreplicates = 1\nout_dir = "{tmp_path / "o"}"\n'
                   '[capture]\ntimeseries = true\n')
    assert main(["run", "--config", str(cfg), "--workers", "1"]) == 0
    assert (tmp_path / "o" / "timeseries_r00.csv").exists()


def test_cli_sweep(tmp_path, capsys):
    code = main(["sweep", "--axis1", "r=1.0,4.0", "--axis2", "mu=2.4,3.0", "--steps", "10", "--cell-replicates",
                 "1", "--out-dir", str(tmp_path), "--workers", "1"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "axis1,axis2,mean_rho_c,std_rho_c" and len(out) == 5


def test_cli_sweep_without_axes(tmp_path, capsys):
    assert main(["sweep", "--steps", "5", "--out-dir", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_analytics(tmp_path, capsys):
    assert main(["analytics", "--lambda", "2", "--mu", "2.5", "--N", "2", "--r", "4", "--nc", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "n,P_n" and out[1].startswith("0,0.40983")
    assert out[4].startswith("lambda,mu,N,rho,L,ET,psi,psi_limit")
    table = tmp_path / "p.csv"
    assert main(["analytics", "--mu", "3", "--N", "10", "--table", str(table)]) == 0
    assert len(table.read_text().splitlines()) == 12


def test_cli_validate_queue(capsys):
    assert main(["validate-queue", "--n", "500", "--rounds", "5"]) == 0
    header, row = capsys.readouterr().out.splitlines()
    values = dict(zip(header.split(","), row.split(",")))
    assert 0.7 < float(values["mean_T"]) < 1.2


def test_cli_bad_value_is_error(tmp_path, capsys):
    assert main(["run", "--mu", "-1", "--out-dir", str(tmp_path)]) == 2
    assert "mu" in capsys.readouterr().err

import json

import numpy as np
import pytest

from dan_lab import app
from dan_lab.core import storage
from dan_lab.core.evaluation import REPORT_COLUMNS
from dan_lab.core.gradients import CURVE_COLUMNS
from dan_lab.main import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main


@pytest.fixture
def config_file(tmp_path, tiny_config_dict):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_config_dict))
    return path


@pytest.fixture
def trained_run(tmp_path, config_file):
    assert main(["train", "--config", str(config_file), "--out", str(tmp_path / "runs")]) == EXIT_OK
    (run_dir,) = (tmp_path / "runs").iterdir()
    return run_dir


# train
def test_train_writes_artifacts(trained_run):
    assert (trained_run / "config.json").exists()
    trace = storage.read_csv(trained_run / "trace.csv")
    assert [row["iteration"] for row in trace] == ["1", "2", "3", "4"]
    assert [it for it, _ in storage.list_snapshots(trained_run)] == [2, 4]
    (report,) = storage.read_csv(trained_run / "report.csv")
    assert list(report) == REPORT_COLUMNS
    assert report["iteration"] == "4"


def test_train_is_reproducible(tmp_path, config_file):
    root = tmp_path / "again"
    for _ in range(2):
        assert main(["train", "--config", str(config_file), "--out", str(root)]) == EXIT_OK
    first, second = sorted(root.iterdir())
    assert (first / "trace.csv").read_bytes() == (second / "trace.csv").read_bytes()
    for (_, a), (_, b) in zip(storage.list_snapshots(first), storage.list_snapshots(second)):
        assert a.read_bytes() == b.read_bytes()


def test_seed_override(tmp_path, config_file):
    run_dir, _ = app.cmd_train(str(config_file), seed=77, out=str(tmp_path / "seeded"), show=False)
    assert json.loads((run_dir / "config.json").read_text())["train"]["seed"] == 77
    header, _ = storage.load_checkpoint(storage.list_snapshots(run_dir)[-1][1])
    assert header["seed"] == 77


def test_env_var_sets_output_root(tmp_path, config_file, monkeypatch):
    monkeypatch.setenv("DAN_LAB_OUT", str(tmp_path / "from-env"))
    assert main(["train", "--config", str(config_file)]) == EXIT_OK
    assert len(list((tmp_path / "from-env").iterdir())) == 1


def test_invalid_config_exits_with_validation_code(tmp_path, tiny_config_dict, capsys):
    del tiny_config_dict["train"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(tiny_config_dict))
    assert main(["train", "--config", str(path), "--out", str(tmp_path)]) == EXIT_VALIDATION
    assert "missing required field train" in capsys.readouterr().out


def test_abort_exits_with_runtime_code(tmp_path, config_file, monkeypatch):
    from dan_lab.errors import TrainingAbort

    def diverge(*args, **kwargs):
        raise TrainingAbort("G loss", 1, "loss")

    monkeypatch.setattr(app, "run_training", diverge)
    assert main(["train", "--config", str(config_file), "--out", str(tmp_path / "r")]) == EXIT_RUNTIME


# eval
def test_eval_checkpoint(tmp_path, trained_run, config_file):
    _, checkpoint = storage.list_snapshots(trained_run)[-1]
    out = tmp_path / "eval.csv"
    samples = tmp_path / "samples.csv"
    code = main([
        "eval", "--checkpoint", str(checkpoint), "--config", str(config_file),
        "--n-samples", "300", "--out", str(out), "--dump-samples", str(samples),
    ])
    assert code == EXIT_OK
    (row,) = storage.read_csv(out)
    assert row["iteration"] == "4"
    assert 0 <= int(row["modes_captured"]) <= 8
    dumped = storage.read_csv(samples)
    assert len(dumped) == 300
    assert list(dumped[0]) == ["x0", "x1", "mode"]


def test_eval_rejects_zero_samples(trained_run, config_file):
    _, checkpoint = storage.list_snapshots(trained_run)[-1]
    code = main(["eval", "--checkpoint", str(checkpoint), "--config", str(config_file), "--n-samples", "0"])
    assert code == EXIT_VALIDATION


def test_eval_shape_mismatch(trained_run, tmp_path, tiny_config_dict):
    tiny_config_dict["networks"]["generator"] = [4, 16, 2]
    other = tmp_path / "other.json"
    other.write_text(json.dumps(tiny_config_dict))
    _, checkpoint = storage.list_snapshots(trained_run)[-1]
    assert main(["eval", "--checkpoint", str(checkpoint), "--config", str(other)]) == EXIT_VALIDATION


def test_eval_checkpoint_needs_config(trained_run):
    _, checkpoint = storage.list_snapshots(trained_run)[-1]
    assert main(["eval", "--checkpoint", str(checkpoint)]) == EXIT_VALIDATION


def test_eval_run_trajectory(trained_run):
    assert main(["eval", "--run", str(trained_run), "--n-samples", "100"]) == EXIT_OK
    rows = storage.read_csv(trained_run / "trajectory.csv")
    assert [row["iteration"] for row in rows] == ["2", "4"]


def test_eval_is_deterministic(trained_run, config_file):
    _, checkpoint = storage.list_snapshots(trained_run)[-1]
    a = app.cmd_eval(str(checkpoint), str(config_file), n_samples=200, out=str(trained_run / "a.csv"), show=False)
    b = app.cmd_eval(str(checkpoint), str(config_file), n_samples=200, out=str(trained_run / "b.csv"), show=False)
    assert (trained_run / "a.csv").read_bytes() == (trained_run / "b.csv").read_bytes()
    assert np.array_equal(a.histogram, b.histogram)


# analyze
def test_analyze_default_profile(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["analyze", "--out", str(out)]) == EXIT_OK
    rows = storage.read_csv(out)
    assert list(rows[0]) == CURVE_COLUMNS
    footer = rows[-1]
    assert footer["x"] == "region_ratio"
    assert float(footer["p_x"]) < 0.1
    grid = np.array([float(r["x"]) for r in rows[:-1]])
    assert len(grid) == 801
    assert np.all(np.diff(grid) > 0)
    for column in CURVE_COLUMNS[1:]:
        assert np.all(np.isfinite([float(r[column]) for r in rows[:-1]]))


def test_analyze_equal_densities(tmp_path):
    path = tmp_path / "flat.json"
    same = {"means": [[0.0]], "variances": [1.0], "weights": [1.0]}
    path.write_text(json.dumps({
        "schema_version": 1, "name": "fig1", "train": {},
        "analysis": {"px": same, "pg": same, "grid_points": 11},
    }))
    out_path, curve, _ = app.cmd_analyze(str(path), out=str(tmp_path / "flat.csv"), show=False)
    rows = storage.read_csv(out_path)[:-1]
    assert {float(r["d_star"]) for r in rows} == {0.5}


def test_analyze_rejects_multivariate(tmp_path):
    path = tmp_path / "two_d.json"
    path.write_text(json.dumps({
        "schema_version": 1, "name": "fig1", "train": {},
        "analysis": {"px": {"means": [[0.0, 0.0]], "variances": [1.0], "weights": [1.0]}},
    }))
    assert main(["analyze", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == EXIT_VALIDATION


# sweep
def test_sweep_aggregate(tmp_path, tiny_config_dict):
    spec = tmp_path / "sweep.json"
    spec.write_text(json.dumps({
        "schema_version": 1, "base": tiny_config_dict, "seeds": [5, 1, 4, 2, 3], "parallelism": 2,
    }))
    assert main(["sweep", "--config", str(spec), "--out", str(tmp_path / "out")]) == EXIT_OK
    rows = storage.read_csv(tmp_path / "out" / "sweep-tiny" / "aggregate.csv")
    assert len(rows) == 6
    assert [r["seed"] for r in rows[:5]] == ["1", "2", "3", "4", "5"]
    assert all(r["status"] == "ok" for r in rows[:5])
    assert rows[5]["run_id"] == "summary"
    assert rows[5]["status"] == "5/5 ok"


def test_sweep_inline_matches_parallel(tmp_path, tiny_config_dict):
    spec = tmp_path / "sweep.json"
    spec.write_text(json.dumps({"schema_version": 1, "base": tiny_config_dict, "seeds": [1, 2]}))
    _, inline = app.cmd_sweep(str(spec), parallelism=1, out=str(tmp_path / "a"), show=False)
    _, pooled = app.cmd_sweep(str(spec), parallelism=2, out=str(tmp_path / "b"), show=False)
    metrics = ["modes_captured", "entropy", "tv", "hq_fraction", "mmd2"]
    for x, y in zip(inline, pooled):
        assert [x.get(m) for m in metrics] == [y.get(m) for m in metrics]


def test_aggregate_of_constant_column():
    rows = [
        {"run_id": f"r{s}", "seed": s, "status": "ok", "modes_captured": 8, "entropy": 2.0,
         "tv": 0.01, "hq_fraction": 1.0, "mmd2": 0.001}
        for s in (3, 1, 2)
    ]
    rows.append({"run_id": "r4", "seed": 4, "status": "aborted", "error": "non-finite G loss at iteration 7"})
    all_rows, summary = app.aggregate_rows(rows)
    assert [r["seed"] for r in all_rows[:4]] == [1, 2, 3, 4]
    assert summary["modes_captured"] == (8.0, 8.0, 8.0)
    assert all_rows[-1]["status"] == "3/4 ok"
    assert all_rows[-1]["entropy"] == "2.0/2.0/2.0"


def test_sweep_parallelism_must_be_positive(tmp_path, tiny_config_dict):
    spec = tmp_path / "sweep.json"
    spec.write_text(json.dumps({"schema_version": 1, "base": tiny_config_dict, "seeds": [1]}))
    assert main(["sweep", "--config", str(spec), "--parallelism", "0"]) == EXIT_VALIDATION

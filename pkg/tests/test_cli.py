"""
Tests de punta a punta de la CLI
"""

from pathlib import Path

import numpy as np
import pytest

import models
from experiments.simulate import SimulateExperiment
from fbsfilter.export import read_trace_csv
from main import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main

from conftest import DEGENERATE, small_config_data

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run_dir(out, prefix):
    dirs = [p for p in out.iterdir() if p.name.startswith(prefix)]
    assert len(dirs) == 1
    return dirs[0]


def test_simulate_writes_artifacts(ledger, write_config, tmp_path):
    out = tmp_path / "out"
    code = main(["simulate", "--config", write_config(small_config_data()), "--out", str(out)])
    assert code == EXIT_OK
    run_dir = _run_dir(out, "simulate-")
    for name in ("report.json", "report.txt", "field_W.csv", "field_W.npz", "field_X.csv", "field_logV.csv"):
        assert (run_dir / name).exists(), name


def test_config_errors_exit_2(ledger, tmp_path):
    assert main(["simulate", "--config", str(CONFIGS / "invalid_alpha.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["simulate", "--config", str(tmp_path / "nada.json"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_failed_check_exit_1(ledger, write_config, tmp_path):
    data = small_config_data(tolerances={"holder_bound": 1e-6})
    assert main(["simulate", "--config", write_config(data), "--out", str(tmp_path)]) == EXIT_CHECK_FAILED


def test_blow_up_exit_3(ledger, write_config, tmp_path):
    data = small_config_data(sde={
        "drift": {"name": "linear", "params": {"slope": 1e200}},
        "x0": {"law": "fixed", "mean": 1.0},
    })
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(["simulate", "--config", write_config(data), "--out", str(tmp_path)])
    assert code == EXIT_NUMERICAL


def test_unexpected_error_propagates_and_is_recorded(ledger, write_config, tmp_path, monkeypatch):
    def broken(self):
        raise RuntimeError("falla interna")

    monkeypatch.setattr(SimulateExperiment, "run_checks", broken)
    with pytest.raises(RuntimeError, match="falla interna"):
        main(["simulate", "--config", write_config(small_config_data()), "--out", str(tmp_path)])

    db = models.SessionLocal()
    try:
        run = db.query(models.ExperimentRun).one()
        assert run.status == "error"
        assert run.exit_code is None
        assert "RuntimeError" in run.error_message
    finally:
        db.close()


def test_non_staircase_path_exit_2(ledger, write_config, tmp_path):
    data = small_config_data(filter={"n_particles": 60, "batch_size": 25, "paths": [[[0, 0], [7, 7]]]})
    assert main(["simulate", "--config", write_config(data), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_runs_are_byte_identical(ledger, write_config, tmp_path):
    config = write_config(small_config_data())
    for name in ("a", "b"):
        assert main(["simulate", "--config", config, "--out", str(tmp_path / name), "--jobs", "2"]) == EXIT_OK
    first, second = _run_dir(tmp_path / "a", "simulate-"), _run_dir(tmp_path / "b", "simulate-")
    for name in ("report.json", "field_W.npz", "field_WY.npz", "field_Y.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_seed_flag_changes_run(ledger, write_config, tmp_path):
    config = write_config(small_config_data())
    main(["simulate", "--config", config, "--out", str(tmp_path), "--seed", "1"])
    main(["simulate", "--config", config, "--out", str(tmp_path), "--seed", "2"])
    assert len(list(tmp_path.glob("simulate-*"))) == 2


def test_degenerate_filter_curve(ledger, write_config, tmp_path):
    data = small_config_data(**DEGENERATE)
    data["filter"]["test_functions"] = ["identity", "one"]
    code = main(["filter-curve", "--config", write_config(data), "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = read_trace_csv(_run_dir(tmp_path, "filter-curve-") / "trace_zakai_identity_lower.csv")
    pis = [row["pi"] for row in rows]
    assert max(pis) - min(pis) == pytest.approx(0.0, abs=1e-12)

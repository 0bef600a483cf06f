"""
Tests del ledger de corridas y de la clase base de experimentos
"""

import json

import pytest

import models
from experiment_base import Experiment
from fbsfilter.config import parse_config, runtime_settings
from fbsfilter.stats import CheckResult
from utils.hash import make_config_digest, make_run_id

from conftest import small_config_data


def test_run_id_and_digest():
    digest = make_config_digest({"b": 1, "a": [1, 2]})
    assert digest == make_config_digest({"a": [1, 2], "b": 1})
    run_id = make_run_id("simulate", digest, 7)
    assert len(run_id) == 16
    assert run_id == make_run_id("SIMULATE ", digest, 7)
    assert run_id != make_run_id("simulate", digest, 8)


def test_ledger_records_run(ledger):
    db = models.SessionLocal()
    try:
        run = models.start_run(db, "abc", "simulate", "d" * 64, 3, "fast", out_dir="runs/x")
        assert run.status == "running"
        models.save_check(db, run, {"name": "c", "passed": True, "statistic": 0.1, "threshold": 1.0, "details": "{}"})
        models.finish_run(db, run, "success", checks_total=1, checks_passed=1, exit_code=0)
        stored = db.query(models.ExperimentRun).filter_by(run_id="abc").one()
        assert stored.status == "success"
        assert stored.finished_at is not None
        assert [c.name for c in stored.checks] == ["c"]
    finally:
        db.close()


@pytest.fixture
def experiment(tmp_path, monkeypatch):
    monkeypatch.delenv("FBS_OUT_DIR", raising=False)
    config = parse_config(small_config_data())
    return Experiment(config, runtime_settings(config, out=str(tmp_path)))


def test_run_dir_from_name_and_run_id(experiment, tmp_path):
    assert experiment.run_dir == tmp_path / f"experiment-{experiment.run_id}"


def test_report_rejects_duplicated_checks(experiment):
    check = CheckResult("a", True, 0.0, 1.0)
    with pytest.raises(ValueError):
        experiment.report([check, check])


def test_db_check_serializes_details(experiment):
    row = experiment.to_db_check(CheckResult("a", False, 2.0, 1.0, {"z": 1, "a": [1]}))
    assert row["passed"] is False
    assert json.loads(row["details"]) == {"a": [1], "z": 1}

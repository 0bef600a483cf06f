"""
Tests de los artefactos de una corrida
"""

import json

import numpy as np
import pytest

from fbsfilter.export import (
    FIELD_HEADER,
    RunWriter,
    field_csv,
    field_npz_bytes,
    fmt,
    load_field_npz,
    read_trace_csv,
    report_json,
    trace_csv,
)
from fbsfilter.gaussfield import GaussianFieldSample
from fbsfilter.lattice import Grid2D


@pytest.fixture
def sample():
    grid = Grid2D(1.0, 2.0, 2, 3)
    increments = np.arange(6, dtype=float).reshape(2, 3) / 10.0
    return GaussianFieldSample.from_increments(grid, increments)


def test_fmt_round_trips_floats():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(2) == "2"


def test_field_csv_layout(sample):
    lines = field_csv(sample.cumulative).splitlines()
    assert lines[0] == ",".join(FIELD_HEADER)
    assert len(lines) == 1 + 6
    # nodo (0, 0) en el punto medio de la primera celda
    assert lines[1] == "0,0,0.25,0.33333333333333331,0"


def test_npz_is_deterministic_and_loadable(sample, tmp_path):
    payload = field_npz_bytes(sample)
    assert payload == field_npz_bytes(sample)
    path = tmp_path / "field.npz"
    path.write_bytes(payload)
    loaded = load_field_npz(path)
    assert loaded.grid == sample.grid
    np.testing.assert_array_equal(loaded.increments.values, sample.increments.values)


def test_trace_csv_round_trip(tmp_path):
    rows = [{"z1": 0.5, "z2": 0.25, "sigma": 1.0, "pi": 0.1, "se": 0.01, "n_eff": 90.0}]
    path = tmp_path / "trace.csv"
    path.write_text(trace_csv(rows), encoding="utf-8")
    assert read_trace_csv(path) == rows


def test_report_json_is_sorted():
    text = report_json({"b": 2, "a": {"d": 1, "c": 0}})
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"c"') < text.index('"d"')
    assert json.loads(text) == {"a": {"c": 0, "d": 1}, "b": 2}


def test_run_writer(sample, tmp_path):
    writer = RunWriter(tmp_path / "run")
    writer.write_field("field_W", sample, ("csv",))
    writer.write_report({"subcommand": "simulate", "checks": []}, {"total": 0.5})
    assert writer.written == ["field_W.csv", "report.json", "report.txt"]
    assert not (tmp_path / "run" / "field_W.npz").exists()
    assert "Tiempo total" in (tmp_path / "run" / "report.txt").read_text(encoding="utf-8")
    assert "Tiempo" not in (tmp_path / "run" / "report.json").read_text(encoding="utf-8")

"""
Fixtures compartidas de la suite
"""

import json

import pytest

import models
from fbsfilter.config import parse_config
from fbsfilter.gaussfield import HurstPair
from fbsfilter.lattice import Grid2D
from fbsfilter.suite import build_scenario


def small_config_data(**overrides) -> dict:
    """Config chica: grilla 8x8 y pocas partículas"""
    data = {
        "schema_version": 1,
        "grid": {"T1": 1.0, "T2": 1.0, "n1": 8, "n2": 8},
        "filter": {"n_particles": 60, "batch_size": 25},
        "seeds": {"master": 12345},
    }
    for key, value in overrides.items():
        data[key] = value
    return data


DEGENERATE = {
    "sde": {
        "drift": {"name": "zero"},
        "diffusion": {"name": "zero"},
        "x0": {"law": "normal", "mean": 0.3, "std": 1.0},
    },
    "sensor": {"g": {"name": "zero"}, "holder_order": 1.0},
}


@pytest.fixture
def grid8():
    return Grid2D(1.0, 1.0, 8, 8)


@pytest.fixture
def hurst():
    return HurstPair(0.6, 0.6)


@pytest.fixture
def scenario():
    return build_scenario(parse_config(small_config_data()))


@pytest.fixture
def degenerate_scenario():
    data = small_config_data(**DEGENERATE)
    data["filter"]["test_functions"] = ["identity", "one", "square"]
    return build_scenario(parse_config(data))


@pytest.fixture
def write_config(tmp_path):
    """Escribe un dict como JSON y devuelve la ruta"""

    def _write(data: dict, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def ledger(tmp_path, monkeypatch):
    """Ledger SQLite temporario para las corridas de la CLI"""
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    monkeypatch.setenv("FBS_DATABASE_URL", url)
    for name in ("FBS_OUT_DIR", "FBS_JOBS", "FBS_CHECK_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    models.configure_database(url)
    models.init_db()
    return url

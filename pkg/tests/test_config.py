"""
Tests de la carga y validación de la configuración
"""

import pytest

from fbsfilter.config import SCHEMA_VERSION, load_config, parse_config, runtime_settings, with_seed
from fbsfilter.errors import ConfigError

from conftest import small_config_data


def test_defaults_parse():
    config = parse_config({"schema_version": SCHEMA_VERSION})
    assert config.grid.n1 == 16
    assert config.hurst.alpha == 0.6
    assert config.filter.whitening == "kernel"
    assert config.filter.test_functions == ["identity", "one"]


def test_alpha_outside_persistent_range():
    with pytest.raises(ConfigError) as exc:
        parse_config({"schema_version": 1, "hurst": {"alpha": 0.4, "beta": 0.6}})
    assert any("hurst.alpha" in msg and "persistencia" in msg for msg in exc.value.errors)


def test_condition_a1_rejected():
    data = small_config_data(hurst={"alpha": 0.75, "beta": 0.6},
                             sensor={"g": {"name": "sin"}, "holder_order": 0.1})
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    assert any("(A1)" in msg for msg in exc.value.errors)


@pytest.mark.parametrize("data", [
    {"schema_version": 2},
    {},
    {"schema_version": 1, "unknown": True},
    {"schema_version": 1, "filter": {"test_functions": ["cubic"]}},
    {"schema_version": 1, "sde": {"drift": {"name": "exp"}}},
    {"schema_version": 1, "tolerances": {"refinement_levels": [256, 128]}},
])
def test_invalid_documents(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="No existe"):
        load_config(tmp_path / "nada.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{schema_version: 1", encoding="utf-8")
    with pytest.raises(ConfigError, match="JSON inválido"):
        load_config(bad)


def test_echo_round_trip(write_config):
    config = load_config(write_config(small_config_data()))
    assert parse_config(config.echo()) == config


def test_with_seed():
    config = parse_config(small_config_data())
    assert with_seed(config, None) is config
    assert with_seed(config, 99).seeds.master == 99
    assert config.seeds.master == 12345


def test_runtime_settings_precedence(monkeypatch):
    for name in ("FBS_OUT_DIR", "FBS_JOBS", "FBS_CHECK_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    config = parse_config(small_config_data(outputs={"directory": "desde_config"}))

    assert runtime_settings(config).out_dir == "desde_config"
    monkeypatch.setenv("FBS_OUT_DIR", "desde_env")
    monkeypatch.setenv("FBS_JOBS", "3")
    settings = runtime_settings(config)
    assert (settings.out_dir, settings.jobs, settings.check_level) == ("desde_env", 3, "full")
    settings = runtime_settings(config, out="desde_flag", jobs=2, check_level="fast")
    assert (settings.out_dir, settings.jobs, settings.check_level) == ("desde_flag", 2, "fast")
    assert runtime_settings(None).out_dir == "desde_env"


@pytest.mark.parametrize("kwargs,env", [
    ({"check_level": "medium"}, {}),
    ({"jobs": 0}, {}),
    ({}, {"FBS_JOBS": "muchos"}),
])
def test_runtime_settings_errors(monkeypatch, kwargs, env):
    monkeypatch.delenv("FBS_JOBS", raising=False)
    monkeypatch.delenv("FBS_CHECK_LEVEL", raising=False)
    for name, value in env.items():
        monkeypatch.setenv(name, value)
    with pytest.raises(ConfigError):
        runtime_settings(None, **kwargs)


def test_lambda0_window():
    sensor = {"g": {"name": "sin"}, "holder_order": 0.5}
    # H = 0.7 y λ = 0.5: la ventana es (0.4, 1/2)
    with pytest.raises(ConfigError) as exc:
        parse_config(small_config_data(hurst={"alpha": 0.7, "beta": 0.6}, sensor={**sensor, "lambda0": 0.35}))
    assert any("lambda0" in msg for msg in exc.value.errors)
    config = parse_config(small_config_data(sensor={**sensor, "lambda0": 0.45}))
    assert config.echo()["sensor"]["lambda0"] == 0.45

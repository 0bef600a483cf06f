"""
Configuración de experimentos: modelos pydantic para el JSON de la corrida y
valores por defecto del entorno (.env).
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from fbsfilter.errors import ConfigError
from fbsfilter.registry import COEFFICIENTS, SENSORS, TEST_FUNCTIONS

logger = logging.getLogger(__name__)

load_dotenv()

SCHEMA_VERSION = 1
ARTIFACT_VERSION = "1.0.0"


# =========================================================
# MODELOS
# =========================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    T1: float = Field(1.0, gt=0)
    T2: float = Field(1.0, gt=0)
    n1: int = Field(16, ge=2)
    n2: int = Field(16, ge=2)


class HurstConfig(_Strict):
    alpha: float = 0.6
    beta: float = 0.6

    @field_validator("alpha", "beta")
    @classmethod
    def persistent(cls, v: float, info):
        if not 0.5 < v < 1:
            raise ValueError(f"{info.field_name}={v} viola la persistencia: se requiere 0.5 < H < 1")
        return v


class FunctionSpec(_Strict):
    name: str = "zero"
    params: dict[str, float] = Field(default_factory=dict)


class X0Config(_Strict):
    law: Literal["fixed", "normal"] = "fixed"
    mean: float = 0.0
    std: float = Field(0.0, ge=0)


class SdeConfig(_Strict):
    drift: FunctionSpec = Field(default_factory=lambda: FunctionSpec(name="zero"))
    diffusion: FunctionSpec = Field(default_factory=lambda: FunctionSpec(name="constant", params={"c": 0.5}))
    x0: X0Config = Field(default_factory=X0Config)
    check_interval: tuple[float, float] = (-3.0, 3.0)

    @field_validator("drift", "diffusion")
    @classmethod
    def registered(cls, v: FunctionSpec):
        if v.name not in COEFFICIENTS:
            raise ValueError(f"coeficiente '{v.name}' no registrado; opciones {sorted(COEFFICIENTS)}")
        return v


class SensorConfig(_Strict):
    g: FunctionSpec = Field(default_factory=lambda: FunctionSpec(name="sin", params={"amplitude": 0.5}))
    holder_order: float = Field(1.0, gt=0, le=1)
    # orden de Hölder supuesto para las trayectorias de X; solo se valida su ventana
    lambda0: Optional[float] = Field(None, gt=0, lt=0.5)

    @field_validator("g")
    @classmethod
    def registered(cls, v: FunctionSpec):
        if v.name not in SENSORS:
            raise ValueError(f"sensor '{v.name}' no registrado; opciones {sorted(SENSORS)}")
        return v


PathSpec = Union[Literal["lower", "upper", "diagonal"], list[tuple[int, int]]]


class FilterConfig(_Strict):
    n_particles: int = Field(2000, ge=10)
    batch_size: int = Field(1000, ge=1)
    test_functions: list[str] = Field(default_factory=lambda: ["identity", "one"])
    paths: list[PathSpec] = Field(default_factory=lambda: ["lower", "upper", "diagonal"])
    whitening: Literal["kernel", "inverse"] = "kernel"
    noise_route: Literal["kernel", "cholesky"] = "kernel"

    @field_validator("test_functions")
    @classmethod
    def registered(cls, v: list[str]):
        unknown = [name for name in v if name not in TEST_FUNCTIONS]
        if unknown:
            raise ValueError(f"funciones de prueba no registradas: {unknown}; opciones {sorted(TEST_FUNCTIONS)}")
        return v


class SeedConfig(_Strict):
    master: int = Field(20240601, ge=0, lt=2 ** 64)


class ToleranceConfig(_Strict):
    sigmas: float = Field(5.0, gt=0)
    derivative_stability: float = Field(0.05, gt=0)
    holder_bound: float = Field(1e3, gt=0)
    mc_samples: int = Field(20000, ge=100)
    fast_mc_samples: int = Field(2000, ge=100)
    refinement_levels: list[int] = Field(default_factory=lambda: [128, 256, 512, 1024])
    fraccalc_sup_error: float = Field(1e-2, gt=0)
    reciprocity_error: float = Field(5e-2, gt=0)
    kernel_identity_error: float = Field(2e-2, gt=0)
    min_convergence_order: float = Field(0.8, gt=0)

    @field_validator("refinement_levels")
    @classmethod
    def increasing(cls, v: list[int]):
        if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("refinement_levels debe ser creciente con al menos dos niveles")
        return v


class OutputConfig(_Strict):
    directory: Optional[str] = None
    formats: list[Literal["csv", "npz"]] = Field(default_factory=lambda: ["csv", "npz"])


class ExperimentConfig(_Strict):
    schema_version: int
    grid: GridConfig = Field(default_factory=GridConfig)
    hurst: HurstConfig = Field(default_factory=HurstConfig)
    sde: SdeConfig = Field(default_factory=SdeConfig)
    sensor: SensorConfig = Field(default_factory=SensorConfig)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    seeds: SeedConfig = Field(default_factory=SeedConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    outputs: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("schema_version")
    @classmethod
    def supported(cls, v: int):
        if v != SCHEMA_VERSION:
            raise ValueError(f"schema_version {v} no soportada (actual: {SCHEMA_VERSION})")
        return v

    @model_validator(mode="after")
    def condition_a1(self):
        bound = 2 * max(self.hurst.alpha, self.hurst.beta) - 1
        if not self.sensor.holder_order > bound:
            raise ValueError(
                f"condición (A1): holder_order={self.sensor.holder_order} debe superar 2·max(α,β) - 1 = {bound:.4g}"
            )
        lambda0 = self.sensor.lambda0
        if lambda0 is not None and not lambda0 > bound / 2 / self.sensor.holder_order:
            raise ValueError(
                f"lambda0={lambda0} fuera de la ventana ({bound / 2:.4g}/λ, 1/2) con λ={self.sensor.holder_order}"
            )
        return self

    def echo(self) -> dict:
        return self.model_dump(mode="json")


# =========================================================
# CARGA
# =========================================================

def _messages(error: ValidationError) -> list[str]:
    out = []
    for item in error.errors():
        loc = ".".join(str(p) for p in item["loc"]) or "config"
        out.append(f"{loc}: {item['msg']}")
    return out


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError("Configuración inválida", _messages(e)) from e


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"No existe el archivo de configuración: {path}", [f"--config: {path}"]) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido en {path}: {e}", [f"línea {e.lineno}: {e.msg}"]) from e
    config = parse_config(data)
    logger.info(f"Configuración cargada desde {path}")
    return config


def with_seed(config: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    """--seed reemplaza la semilla maestra"""
    if seed is None:
        return config
    data = config.echo()
    data["seeds"]["master"] = seed
    return parse_config(data)


# =========================================================
# ENTORNO
# =========================================================

@dataclass(frozen=True)
class RuntimeSettings:
    database_url: str
    out_dir: str
    jobs: int
    check_level: str


def runtime_settings(
        config: ExperimentConfig | None = None,
        out: str | None = None,
        jobs: int | None = None,
        check_level: str | None = None,
) -> RuntimeSettings:
    """Precedencia: flags de la CLI > variables de entorno > archivo de configuración"""
    config_out = config.outputs.directory if config else None
    level = check_level or os.getenv("FBS_CHECK_LEVEL", "full")
    if level not in ("fast", "full"):
        raise ConfigError(f"Nivel de chequeo inválido: {level}", ["check_level: opciones ['fast', 'full']"])
    try:
        n_jobs = jobs if jobs is not None else int(os.getenv("FBS_JOBS", "1"))
    except ValueError as e:
        raise ConfigError(f"FBS_JOBS inválido: {e}", ["FBS_JOBS: entero >= 1"]) from e
    if n_jobs < 1:
        raise ConfigError(f"--jobs debe ser >= 1, recibido {n_jobs}", ["jobs: entero >= 1"])
    return RuntimeSettings(
        database_url=os.getenv("FBS_DATABASE_URL", "sqlite:///fbsfilter_runs.db"),
        out_dir=out or os.getenv("FBS_OUT_DIR") or config_out or "runs",
        jobs=n_jobs,
        check_level=level,
    )

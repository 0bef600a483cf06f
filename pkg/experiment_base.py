"""
Experimento base de fbsfilter

Clase base para todos los subcomandos: arma el escenario, abre el directorio
de la corrida con un único escritor y produce el reporte.
"""

import json
import logging
import time
from datetime import datetime
from pathlib import Path

from fbsfilter.config import ARTIFACT_VERSION, ExperimentConfig, RuntimeSettings
from fbsfilter.export import RunWriter
from fbsfilter.stats import CheckResult
from fbsfilter.suite import Scenario, build_scenario
from utils.hash import make_config_digest, make_run_id

logger = logging.getLogger(__name__)


class Experiment:
    """
    Clase base de los subcomandos

    Cada subclase implementa run_checks(), que escribe sus artefactos con
    self.writer y devuelve la lista de veredictos.
    """

    name = "experiment"

    def __init__(self, config: ExperimentConfig, settings: RuntimeSettings):
        self.config = config
        self.settings = settings
        self.digest = make_config_digest(config.echo())
        self.run_id = make_run_id(self.name, self.digest, config.seeds.master)
        self.run_dir = Path(settings.out_dir) / f"{self.name}-{self.run_id}"
        self.scenario: Scenario | None = None
        self.writer: RunWriter | None = None
        self.timing: dict[str, float] = {}
        self._started = 0.0

    @property
    def fast(self) -> bool:
        return self.settings.check_level == "fast"

    @property
    def sigmas(self) -> float:
        return self.config.tolerances.sigmas

    def start(self):
        print(f"[{self._timestamp()}] Preparando {self.name} en {self.run_dir}")
        self._started = time.perf_counter()
        self.scenario = build_scenario(self.config)
        self.writer = RunWriter(self.run_dir)
        print(f"[{self._timestamp()}] ✓ Escenario listo: grilla {self.scenario.grid.shape}")

    def run_checks(self) -> list[CheckResult]:
        raise NotImplementedError

    def step(self, label: str, fn, *args, **kwargs):
        """Ejecuta un paso cronometrado"""
        print(f"[{self._timestamp()}] {label}...")
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.timing[label] = time.perf_counter() - t0
        print(f"[{self._timestamp()}] ✓ {label} ({self.timing[label]:.2f} s)")
        return out

    def report(self, checks: list[CheckResult]) -> dict:
        names = [c.name for c in checks]
        duplicated = sorted({n for n in names if names.count(n) > 1})
        if duplicated:
            raise ValueError(f"Chequeos repetidos en el reporte: {duplicated}")
        return {
            "artifact_version": ARTIFACT_VERSION,
            "subcommand": self.name,
            "run_id": self.run_id,
            "config_digest": self.digest,
            "config": self.config.echo(),
            "check_level": self.settings.check_level,
            "checks": [c.to_dict() for c in checks],
            "artifacts": sorted(self.writer.written) if self.writer else [],
        }

    def finish(self, checks: list[CheckResult]) -> dict:
        self.timing["total"] = time.perf_counter() - self._started
        report = self.report(checks)
        self.writer.write_report(report, self.timing)
        return report

    def to_db_check(self, check: CheckResult) -> dict:
        return {
            "name": check.name,
            "passed": check.passed,
            "statistic": check.statistic,
            "threshold": check.threshold,
            "details": json.dumps(check.details, sort_keys=True, default=str),
        }

    def close(self):
        print(f"[{self._timestamp()}] ✓ {self.name} cerrado")

    def _timestamp(self) -> str:
        """Hora HH:MM:SS que antecede cada línea de avance de la corrida"""
        return datetime.now().strftime('%H:%M:%S')

    def __enter__(self):
        """Arma el escenario y abre el directorio de la corrida antes de los chequeos"""
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Cierra la corrida; una excepción de los chequeos sigue hacia run_experiment"""
        if exc_type is not None:
            logger.error(f"{self.name} interrumpido por {exc_type.__name__}: {exc_val}")
        self.close()
        return False

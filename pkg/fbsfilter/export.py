"""
Escritura de artefactos de una corrida: CSV de campos y trazas, .npz de campos
y reportes JSON/texto. Todas las escrituras de un directorio pasan por un
único RunWriter.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import threading
import zipfile
from pathlib import Path
from typing import Iterable

import numpy as np

from fbsfilter.errors import ShapeError
from fbsfilter.gaussfield import GaussianFieldSample
from fbsfilter.lattice import Grid2D, SampledField2D

logger = logging.getLogger(__name__)

FIELD_HEADER = ("i", "j", "z1", "z2", "value")
TRACE_HEADER = ("z1", "z2", "sigma", "pi", "se", "n_eff")
NPZ_ARRAYS = ("cumulative", "increments", "T1", "T2", "n1", "n2")

_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# =========================================================
# SERIALIZACIÓN EN MEMORIA
# =========================================================

def field_csv(f: SampledField2D) -> str:
    """Una fila por nodo; (z1, z2) es la coordenada del nodo"""
    grid = f.grid
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(FIELD_HEADER)
    values = np.asarray(f.values)
    for i, z1 in enumerate(grid.nodes1):
        for j, z2 in enumerate(grid.nodes2):
            writer.writerow((i, j, fmt(z1), fmt(z2), fmt(values[i, j])))
    return buffer.getvalue()


def trace_csv(rows: Iterable[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for row in rows:
        writer.writerow([fmt(row[k]) for k in TRACE_HEADER])
    return buffer.getvalue()


def read_trace_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def field_npz_bytes(sample: GaussianFieldSample) -> bytes:
    """
    .npz estándar (np.load lo lee) con fechas de entrada fijas, de modo que dos
    corridas iguales producen bytes idénticos.
    """
    grid = sample.grid
    arrays = {
        "cumulative": np.asarray(sample.cumulative.values),
        "increments": np.asarray(sample.increments.values),
        "T1": np.asarray(grid.T1),
        "T2": np.asarray(grid.T2),
        "n1": np.asarray(grid.n1),
        "n2": np.asarray(grid.n2),
    }
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in NPZ_ARRAYS:
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_FIXED_DATE)
            payload = io.BytesIO()
            np.lib.format.write_array(payload, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            zf.writestr(info, payload.getvalue())
    return buffer.getvalue()


def load_field_npz(path: str | Path) -> GaussianFieldSample:
    with np.load(path, allow_pickle=False) as data:
        missing = [k for k in NPZ_ARRAYS if k not in data.files]
        if missing:
            raise ShapeError(f"Archivo {path} sin arreglos {missing}")
        grid = Grid2D(float(data["T1"]), float(data["T2"]), int(data["n1"]), int(data["n2"]))
        return GaussianFieldSample.from_cumulative(grid, data["cumulative"])


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def report_text(report: dict, timing: dict[str, float]) -> str:
    lines = ["=" * 70, f"REPORTE {report.get('subcommand', '').upper()}", "=" * 70]
    for check in report.get("checks", []):
        icon = "OK  " if check["passed"] else "FAIL"
        lines.append(f"[{icon}] {check['name']:48} {check['statistic']:.4g} <= {check['threshold']:.4g}")
    passed = sum(c["passed"] for c in report.get("checks", []))
    lines.append("-" * 70)
    lines.append(f"Chequeos aprobados: {passed}/{len(report.get('checks', []))}")
    for name, seconds in timing.items():
        lines.append(f"Tiempo {name}: {seconds:.2f} s")
    return "\n".join(lines) + "\n"


# =========================================================
# ESCRITOR ÚNICO POR DIRECTORIO
# =========================================================

class RunWriter:
    """Serializa las escrituras del directorio de una corrida"""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.written: list[str] = []

    def _write(self, name: str, payload: bytes) -> Path:
        target = self.directory / name
        with self._lock:
            target.write_bytes(payload)
            self.written.append(name)
        logger.debug(f"Artefacto escrito: {target}")
        return target

    def write_text(self, name: str, text: str) -> Path:
        return self._write(name, text.encode("utf-8"))

    def write_field(self, name: str, sample: GaussianFieldSample, formats: Iterable[str] = ("csv", "npz")) -> list[Path]:
        out = []
        if "csv" in formats:
            out.append(self.write_text(f"{name}.csv", field_csv(sample.cumulative)))
        if "npz" in formats:
            out.append(self._write(f"{name}.npz", field_npz_bytes(sample)))
        return out

    def write_point_field(self, name: str, f: SampledField2D) -> Path:
        return self.write_text(f"{name}.csv", field_csv(f))

    def write_trace(self, name: str, rows: Iterable[dict]) -> Path:
        return self.write_text(f"{name}.csv", trace_csv(rows))

    def write_report(self, report: dict, timing: dict[str, float]) -> None:
        self.write_text("report.json", report_json(report))
        self.write_text("report.txt", report_text(report, timing))

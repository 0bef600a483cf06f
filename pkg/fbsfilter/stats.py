"""
Utilidades estadísticas de los chequeos: veredictos, errores estándar,
regresión con errores robustos y orden de convergencia.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from fbsfilter.errors import ShapeError

logger = logging.getLogger(__name__)

DEFAULT_SIGMAS = 5.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def mean_se(samples: np.ndarray) -> tuple[float, float]:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        return float(samples.mean()), 0.0
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(n))


def z_check(
        name: str,
        estimate: float,
        target: float,
        se: float,
        sigmas: float = DEFAULT_SIGMAS,
        allowance: float = 0.0,
        **details,
) -> CheckResult:
    """Pasa si |estimate - target| <= sigmas·se + allowance"""
    deviation = abs(estimate - target)
    threshold = sigmas * se + allowance
    passed = bool(deviation <= threshold)
    if not passed:
        logger.warning(f"{name}: desvío {deviation:.4g} > umbral {threshold:.4g}")
    return CheckResult(name, passed, float(deviation), float(threshold),
                       {"estimate": float(estimate), "target": float(target), "se": float(se), **details})


def bound_check(name: str, value: float, bound: float, **details) -> CheckResult:
    passed = bool(value <= bound)
    if not passed:
        logger.warning(f"{name}: {value:.4g} > {bound:.4g}")
    return CheckResult(name, passed, float(value), float(bound), details)


def product_moment(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """E[xy] para variables de media cero conocida, con su error estándar"""
    return mean_se(np.asarray(x) * np.asarray(y))


def relative_sup_error(approx: np.ndarray, exact: np.ndarray) -> float:
    exact = np.asarray(exact, dtype=float)
    scale = float(np.max(np.abs(exact)))
    if scale == 0:
        return float(np.max(np.abs(approx)))
    return float(np.max(np.abs(np.asarray(approx) - exact))) / scale


def convergence_order(steps: np.ndarray, errors: np.ndarray) -> float:
    """Pendiente de log(error) contra log(h) por mínimos cuadrados"""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.shape != errors.shape or steps.size < 2:
        raise ShapeError("Se necesitan al menos dos pares (h, error)")
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)


def is_decreasing(errors) -> bool:
    errors = list(errors)
    return all(b < a for a, b in zip(errors, errors[1:]))


@dataclass(frozen=True)
class RegressionResult:
    coef: np.ndarray
    se: np.ndarray

    @property
    def max_abs_z(self) -> float:
        safe = np.where(self.se > 0, self.se, np.inf)
        return float(np.max(np.abs(self.coef) / safe))


def ols_hc0(y: np.ndarray, features: np.ndarray) -> RegressionResult:
    """MCO con errores estándar robustos a heterocedasticidad (HC0)"""
    y = np.asarray(y, dtype=float)
    X = np.asarray(features, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"{X.shape[0]} filas de features para {y.shape[0]} respuestas")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    bread = np.linalg.pinv(X.T @ X)
    meat = (X * resid[:, None] ** 2).T @ X
    cov = bread @ meat @ bread
    return RegressionResult(coef, np.sqrt(np.clip(np.diag(cov), 0.0, None)))

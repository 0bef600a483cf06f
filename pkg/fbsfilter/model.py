"""
Modelo de señal y observación: SDE de dos parámetros, transformada δ y
razón de verosimilitud V_z.

Los campos por partícula se manejan como arreglos (..., n1, n2); las variantes
con SampledField2D son envoltorios para un único campo.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from fbsfilter.errors import BlowUpError, DomainError, ShapeError
from fbsfilter.fraccalc import (
    DEFAULT_STABILITY_TOL,
    Grid1D,
    SampledFn1D,
    axis_grid,
    derivative_matrix_left,
    rl_derivative_left,
)
from fbsfilter.gaussfield import GaussianFieldSample, HurstPair, c_star
from fbsfilter.lattice import Grid2D, SampledField2D, cumulative_from_increments

logger = logging.getLogger(__name__)

ScalarFn = Callable[[np.ndarray], np.ndarray]

HOLDER_PAIRS = 200


def cellwise(fn: ScalarFn, x: np.ndarray) -> np.ndarray:
    """fn(x) con la forma de x (los registros pueden devolver escalares)"""
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)


# =========================================================
# TIPOS
# =========================================================

@dataclass(frozen=True)
class HolderCheck:
    order: float
    constant: float
    bound: float
    passed: bool


def holder_surrogate(
        fn: ScalarFn,
        order: float,
        interval: tuple[float, float],
        rng: np.random.Generator,
        bound: float = 1e3,
        pairs: int = HOLDER_PAIRS,
) -> HolderCheck:
    """Cota empírica sup |f(x) - f(y)| / |x - y|^order sobre pares aleatorios"""
    lo, hi = interval
    x = rng.uniform(lo, hi, pairs)
    y = rng.uniform(lo, hi, pairs)
    dist = np.abs(x - y)
    keep = dist > 0
    ratio = np.abs(np.asarray(fn(x)) - np.asarray(fn(y)))[keep] / dist[keep] ** order
    constant = float(np.max(ratio)) if ratio.size else 0.0
    return HolderCheck(order, constant, bound, bool(np.isfinite(constant) and constant <= bound))


@dataclass(frozen=True)
class SdeCoefficients:
    drift: ScalarFn
    diffusion: ScalarFn
    x0: float = 0.0

    def lipschitz_check(self, interval: tuple[float, float], rng: np.random.Generator, bound: float = 1e3) -> HolderCheck:
        drift = holder_surrogate(self.drift, 1.0, interval, rng, bound)
        diffusion = holder_surrogate(self.diffusion, 1.0, interval, rng, bound)
        constant = drift.constant + diffusion.constant
        check = HolderCheck(1.0, constant, bound, constant <= bound)
        if not check.passed:
            logger.warning(f"Coeficientes de la SDE no pasan la cota Lipschitz empírica: C≈{constant:.3g}")
        return check


@dataclass(frozen=True)
class SensorFunction:
    g: ScalarFn
    holder_order: float

    def satisfies_a1(self, hurst: HurstPair) -> bool:
        return self.holder_order > 2 * max(hurst.alpha, hurst.beta) - 1

    def require_a1(self, hurst: HurstPair) -> None:
        if not self.satisfies_a1(hurst):
            raise DomainError(
                f"λ={self.holder_order} no cumple λ > 2·max(α,β) - 1 = {2 * max(hurst.alpha, hurst.beta) - 1:.3g}"
            )

    def holder_check(self, interval: tuple[float, float], rng: np.random.Generator, bound: float = 1e3) -> HolderCheck:
        check = holder_surrogate(self.g, self.holder_order, interval, rng, bound)
        if not check.passed:
            logger.warning(f"Sensor no pasa la cota Hölder empírica de orden {self.holder_order}: C≈{check.constant:.3g}")
        return check


@dataclass(frozen=True)
class DeltaField:
    grid: Grid2D
    values: SampledField2D = field(repr=False)
    l2_norm: float = 0.0
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class LikelihoodState:
    """log V_z por nodo; log V^{-1} = -log V"""

    logV: SampledField2D = field(repr=False)
    logV_v1: SampledField2D | None = field(default=None, repr=False)
    v1_v2_gap: float | None = None

    @property
    def logV_inv(self) -> np.ndarray:
        return -np.asarray(self.logV.values)


# =========================================================
# SEÑAL
# =========================================================

@dataclass(frozen=True)
class SignalPaths:
    """X en nodos y X en la esquina inferior de cada celda (x0 sobre los ejes)"""

    X: np.ndarray = field(repr=False)
    X_low: np.ndarray = field(repr=False)


def euler_sweep(
        drift: ScalarFn,
        diffusion: ScalarFn,
        x0,
        increments: np.ndarray,
        grid: Grid2D,
) -> SignalPaths:
    """
    X(i,j) = x0 + Σ_{k<=i, l<=j} [a(X_low)·h1h2 + b(X_low)·ΔW(k,l)], X_low(k,l) = X(k-1,l-1).

    Barrido por filas i; cada fila se vectoriza sobre columnas y partículas.
    """
    inc = np.asarray(increments, dtype=float)
    if inc.shape[-2:] != grid.shape:
        raise ShapeError(f"Incrementos de forma {inc.shape}, grilla {grid.shape}")
    lead = inc.shape[:-2]
    x0_arr = np.broadcast_to(np.asarray(x0, dtype=float), lead)
    area = grid.cell_area

    X = np.empty(inc.shape)
    X_low = np.empty(inc.shape)
    previous = np.zeros(lead + (grid.n2,))
    for i in range(grid.n1):
        low = np.empty(lead + (grid.n2,))
        low[..., 0] = x0_arr
        if i == 0:
            low[..., 1:] = x0_arr[..., None]
        else:
            low[..., 1:] = X[..., i - 1, :-1]
        contribution = cellwise(drift, low) * area + cellwise(diffusion, low) * inc[..., i, :]
        row = previous + np.cumsum(contribution, axis=-1)
        X[..., i, :] = x0_arr[..., None] + row
        X_low[..., i, :] = low
        previous = row
        if not np.all(np.isfinite(X[..., i, :])):
            bad = np.argwhere(~np.isfinite(X[..., i, :]))
            j = int(bad[:, -1].min())
            raise BlowUpError(f"Valor no finito en el barrido de Euler en el nodo ({i}, {j})", (i, j))
    return SignalPaths(X, X_low)


def simulate_signal(coeffs: SdeCoefficients, wiener: GaussianFieldSample, grid: Grid2D) -> SampledField2D:
    if wiener.grid != grid:
        raise ShapeError(f"Lámina de Wiener en {wiener.grid}, se esperaba {grid}")
    paths = euler_sweep(coeffs.drift, coeffs.diffusion, coeffs.x0, wiener.increments.values, grid)
    return SampledField2D(grid, paths.X)


# =========================================================
# TRANSFORMADA δ
# =========================================================

def _weights(grid: Grid2D, hurst: HurstPair, sign: float) -> np.ndarray:
    w1 = grid.nodes1 ** (sign * (hurst.alpha - 0.5))
    w2 = grid.nodes2 ** (sign * (hurst.beta - 0.5))
    return np.outer(w1, w2)


def g_star_values(X: np.ndarray, g: ScalarFn, hurst: HurstPair, grid: Grid2D) -> np.ndarray:
    return _weights(grid, hurst, -1.0) * cellwise(g, X)


def g_star(X: SampledField2D, g: SensorFunction, H: HurstPair) -> SampledField2D:
    """g*_z = z1^{1/2-α} z2^{1/2-β} g(X_z)"""
    return SampledField2D(X.grid, g_star_values(np.asarray(X.values), g.g, H, X.grid))


def _frac_matrix(grid: Grid1D, order: float, stride: int = 1) -> np.ndarray:
    if order == 0:
        return np.eye(grid.n)
    return derivative_matrix_left(grid, order, stride)


def delta_values(X: np.ndarray, g: ScalarFn, hurst: HurstPair, grid: Grid2D, stride: int = 1) -> np.ndarray:
    """δ por nodo para uno o varios campos X (ejes iniciales de lote)"""
    D1 = _frac_matrix(axis_grid(grid, 1), hurst.alpha - 0.5, stride)
    D2 = _frac_matrix(axis_grid(grid, 2), hurst.beta - 0.5, stride)
    gs = g_star_values(X, g, hurst, grid)
    derivative = np.einsum("ik,...kl,jl->...ij", D1, gs, D2)
    scale = 1.0 / (c_star(hurst.alpha) * c_star(hurst.beta))
    return scale * _weights(grid, hurst, 1.0) * derivative


def delta_2d(
        X: SampledField2D,
        g: SensorFunction,
        H: HurstPair,
        tol: float = DEFAULT_STABILITY_TOL,
) -> DeltaField:
    """
    δ_z(X) = (1/(c*_α c*_β)) z1^{α-1/2} z2^{β-1/2} (D^{α-1/2} ⊗ D^{β-1/2} g*)(z)

    La norma L2 discreta queda registrada; si la derivada con paso h y con paso 2h
    discrepan en más de tol se agrega una advertencia.
    """
    grid = X.grid
    values = delta_values(np.asarray(X.values), g.g, H, grid)
    l2 = float(np.sqrt(np.sum(values ** 2) * grid.cell_area))

    warnings: list[str] = []
    if min(grid.shape) >= 5:
        coarse = delta_values(np.asarray(X.values), g.g, H, grid, stride=2)
        interior = (slice(2, grid.n1 - 2), slice(2, grid.n2 - 2))
        scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
        discrepancy = float(np.max(np.abs(values[interior] - coarse[interior]))) / scale
        if discrepancy > tol:
            msg = f"derivada fraccionaria inestable en δ (discrepancia {discrepancy:.3g})"
            logger.warning(msg)
            warnings.append(msg)
    return DeltaField(grid, SampledField2D(grid, values), l2, tuple(warnings))


def delta_1d(h: SampledFn1D, H: float, tol: float = DEFAULT_STABILITY_TOL) -> SampledFn1D:
    """δ_h(s) = (1/c*_H) s^{H-1/2} (D^{H-1/2}_{0+} v^{1/2-H} h(v))(s)"""
    a = H - 0.5
    s = h.grid.nodes
    if a == 0:
        return SampledFn1D(h.grid, h.values / c_star(H))
    weighted = SampledFn1D(h.grid, s ** (-a) * h.values)
    # s^{-a}·h es singular en 0: sin ajuste de borde
    derivative = rl_derivative_left(weighted, a, tol, boundary_fit=False)
    return SampledFn1D(h.grid, s ** a * derivative.values / c_star(H), dict(derivative.diagnostics))


def a2_surrogate(deltas: np.ndarray, grid: Grid2D) -> float:
    """Promedio MC de ∬ δ² dζ (versión discreta de la condición de integrabilidad)"""
    deltas = np.asarray(deltas, dtype=float)
    per_sample = np.sum(deltas ** 2, axis=(-2, -1)) * grid.cell_area
    return float(np.mean(per_sample))


# =========================================================
# OBSERVACIÓN Y VEROSIMILITUD
# =========================================================

def observation_values(X: np.ndarray, g: ScalarFn, noise_cumulative: np.ndarray, grid: Grid2D) -> np.ndarray:
    drift = cumulative_from_increments(cellwise(g, X) * grid.cell_area)
    return drift + noise_cumulative


def make_observation(X: SampledField2D, g: SensorFunction, noise: GaussianFieldSample) -> SampledField2D:
    """Y_z = Σ_{celdas ≺ z} g(X en el nodo)·h1h2 + B_z"""
    X.same_grid(noise.cumulative)
    return SampledField2D(X.grid, observation_values(np.asarray(X.values), g.g, np.asarray(noise.cumulative.values), X.grid))


def log_likelihood_values(delta: np.ndarray, dW: np.ndarray, area: float, form: str = "v2") -> np.ndarray:
    """
    log V acumulado por nodo.
    v2: -Σ δ ΔW^Y + ½ Σ δ² A (W^Y observado); v1: -Σ δ ΔW^B - ½ Σ δ² A (ruido verdadero).
    """
    delta = np.asarray(delta, dtype=float)
    if form == "v2":
        per_cell = -delta * dW + 0.5 * delta ** 2 * area
    elif form == "v1":
        per_cell = -delta * dW - 0.5 * delta ** 2 * area
    else:
        raise DomainError(f"Forma de verosimilitud desconocida: {form}")
    return cumulative_from_increments(per_cell)


def likelihood(
        delta: DeltaField,
        wY: GaussianFieldSample,
        wB: GaussianFieldSample | None = None,
) -> LikelihoodState:
    if wY.grid != delta.grid:
        raise ShapeError(f"W^Y en {wY.grid}, δ en {delta.grid}")
    area = delta.grid.cell_area
    d = np.asarray(delta.values.values)
    logV = log_likelihood_values(d, np.asarray(wY.increments.values), area, "v2")
    if wB is None:
        return LikelihoodState(SampledField2D(delta.grid, logV))

    if wB.grid != delta.grid:
        raise ShapeError(f"W^B en {wB.grid}, δ en {delta.grid}")
    logV1 = log_likelihood_values(d, np.asarray(wB.increments.values), area, "v1")
    gap = float(np.max(np.abs(logV - logV1)))
    logger.debug(f"Diferencia entre formas V1 y V2 de log V: {gap:.3g}")
    return LikelihoodState(SampledField2D(delta.grid, logV), SampledField2D(delta.grid, logV1), gap)

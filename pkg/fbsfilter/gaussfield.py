"""
Lámina de Wiener, lámina browniana fraccionaria (fBs), núcleos K_H y K_H^{-1}
y las transformaciones de coloreado / blanqueo entre ambas.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.integrate import quad
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import gamma, hyp2f1

from fbsfilter.errors import DomainError, FactorizationError, ShapeError
from fbsfilter.fraccalc import (
    Grid1D,
    SampledFn1D,
    axis_grid,
    rl_derivative_right,
    rl_integral_right,
)
from fbsfilter.lattice import (
    Grid2D,
    Point2,
    SampledField2D,
    cumulative_from_increments,
    increments_from_cumulative,
)
from fbsfilter.rng import Seed, as_generator

logger = logging.getLogger(__name__)

MAX_CHOLESKY_NODES = 4096
JITTER_SCALE = 1e-12
WHITENING_RULES = ("inverse", "kernel")


# =========================================================
# TIPOS
# =========================================================

@dataclass(frozen=True)
class HurstPair:
    alpha: float
    beta: float

    def __post_init__(self):
        for name, value in (("alpha", self.alpha), ("beta", self.beta)):
            if not 0.5 < value < 1:
                raise DomainError(f"Hurst {name}={value} fuera del régimen persistente (0.5, 1)")

    @classmethod
    def formal(cls, alpha: float, beta: float) -> "HurstPair":
        """Par sin validar el régimen persistente; admite 0.5 (caso Wiener)"""
        for value in (alpha, beta):
            if not 0.5 <= value < 1:
                raise DomainError(f"Hurst {value} fuera de [0.5, 1)")
        obj = object.__new__(cls)
        object.__setattr__(obj, "alpha", float(alpha))
        object.__setattr__(obj, "beta", float(beta))
        return obj

    @property
    def is_wiener(self) -> bool:
        return self.alpha == 0.5 and self.beta == 0.5


@dataclass(frozen=True)
class GaussianFieldSample:
    grid: Grid2D
    cumulative: SampledField2D = field(repr=False)
    increments: SampledField2D = field(repr=False)

    @classmethod
    def from_increments(cls, grid: Grid2D, increments: np.ndarray) -> "GaussianFieldSample":
        inc = np.asarray(increments, dtype=float)
        return cls(grid, SampledField2D(grid, cumulative_from_increments(inc)), SampledField2D(grid, inc))

    @classmethod
    def from_cumulative(cls, grid: Grid2D, cumulative: np.ndarray) -> "GaussianFieldSample":
        cum = np.asarray(cumulative, dtype=float)
        return cls(grid, SampledField2D(grid, cum), SampledField2D(grid, increments_from_cumulative(cum)))


# =========================================================
# COVARIANZAS
# =========================================================

def fbm_covariance(H: float, s, t):
    """γ_H(s, t) = ½(|s|^{2H} + |t|^{2H} - |t - s|^{2H})"""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.abs(s) ** (2 * H) + np.abs(t) ** (2 * H) - np.abs(t - s) ** (2 * H))


def fbs_covariance(hurst: HurstPair, z: Point2, zp: Point2) -> float:
    return float(fbm_covariance(hurst.alpha, z.z1, zp.z1) * fbm_covariance(hurst.beta, z.z2, zp.z2))


def wiener_covariance(z: Point2, zp: Point2) -> float:
    return min(z.z1, zp.z1) * min(z.z2, zp.z2)


@dataclass(frozen=True)
class CovarianceModel:
    kind: str
    hurst: HurstPair | None = None

    def __post_init__(self):
        if self.kind not in ("wiener", "fbs"):
            raise DomainError(f"Modelo de covarianza desconocido: {self.kind}")
        if self.kind == "fbs" and self.hurst is None:
            raise DomainError("El modelo fbs requiere un HurstPair")

    def _index(self, axis: int) -> float:
        if self.kind == "wiener":
            return 0.5
        return self.hurst.alpha if axis == 1 else self.hurst.beta

    def axis_matrix(self, coords: np.ndarray, axis: int) -> np.ndarray:
        H = self._index(axis)
        return fbm_covariance(H, coords[:, None], coords[None, :])

    def cov(self, z: Point2, zp: Point2) -> float:
        return float(fbm_covariance(self._index(1), z.z1, zp.z1) * fbm_covariance(self._index(2), z.z2, zp.z2))


def cholesky_factor(matrix: np.ndarray) -> np.ndarray:
    """Cholesky inferior con un único reintento agregando jitter 1e-12·traza/n"""
    try:
        return cholesky(matrix, lower=True)
    except LinAlgError:
        n = matrix.shape[0]
        jitter = JITTER_SCALE * np.trace(matrix) / n
        logger.warning(f"Cholesky falló, reintentando con jitter {jitter:.3g}")
        try:
            return cholesky(matrix + jitter * np.eye(n), lower=True)
        except LinAlgError as e:
            raise FactorizationError(f"Covarianza no factorizable aun con jitter: {e}") from e


# =========================================================
# NÚCLEOS K_H Y K_H^{-1}
# =========================================================

def c_H(H: float) -> float:
    return float(np.sqrt(2 * H * gamma(1.5 - H) / (gamma(H + 0.5) * gamma(2 - 2 * H))))


def c_star(H: float) -> float:
    return c_H(H) * float(gamma(H + 0.5))


def c_prime(H: float) -> float:
    return 1.0 / (c_H(H) * float(gamma(H + 0.5)) * float(gamma(1.5 - H)))


def _check_ts(H: float, t: float, s: float) -> None:
    if not 0 < s < t:
        raise DomainError(f"Núcleo requiere 0 < s < t, recibido s={s}, t={t}")
    if not 0.5 <= H < 1:
        raise DomainError(f"Hurst {H} fuera de [0.5, 1)")


def kernel_K(H: float, t: float, s: float) -> float:
    """K_H(t, s) por la fórmula directa; la integral interior por cuadratura adaptativa"""
    _check_ts(H, t, s)
    a = H - 0.5
    if a == 0:
        return 1.0
    inner, _ = quad(lambda u: u ** (a - 1) * (u - s) ** a, s, t)
    return c_H(H) * ((t / s) ** a * (t - s) ** a - a * s ** (-a) * inner)


def kernel_K_inv(H: float, t: float, s: float) -> float:
    """K_H^{-1}(t, s); la singularidad (u - s)^{-a} se integra con peso algebraico"""
    _check_ts(H, t, s)
    a = H - 0.5
    if a == 0:
        return 1.0
    inner, _ = quad(lambda u: u ** (a - 1), s, t, weight="alg", wvar=(-a, 0.0))
    return c_prime(H) * ((t / s) ** a * (t - s) ** (-a) - a * s ** (-a) * inner)


def kernel_K_closed(H: float, t, s):
    """K_H vectorizado con la integral interior en forma hipergeométrica"""
    a = H - 0.5
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if a == 0:
        return np.ones(np.broadcast(t, s).shape)
    L = t - s
    inner = s ** (a - 1) * L ** (a + 1) / (a + 1) * hyp2f1(1 - a, a + 1, a + 2, -L / s)
    return c_H(H) * ((t / s) ** a * L ** a - a * s ** (-a) * inner)


def kernel_K_inv_closed(H: float, t, s):
    a = H - 0.5
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if a == 0:
        return np.ones(np.broadcast(t, s).shape)
    L = t - s
    inner = s ** (a - 1) * L ** (1 - a) / (1 - a) * hyp2f1(1 - a, 1 - a, 2 - a, -L / s)
    return c_prime(H) * ((t / s) ** a * L ** (-a) - a * s ** (-a) * inner)


def kernel_K_fractional(H: float, t: float, n: int) -> SampledFn1D:
    """K_H(t, ·) = c*_H s^{-a} (I^a_{t-} u^a)(s) en los nodos de una grilla de [0, t]"""
    a = H - 0.5
    grid = Grid1D(0.0, t, n)
    s = grid.nodes
    phi = SampledFn1D(grid, s ** a)
    return SampledFn1D(grid, c_star(H) * s ** (-a) * rl_integral_right(phi, a).values)


def kernel_K_inv_fractional(H: float, t: float, n: int) -> SampledFn1D:
    """K_H^{-1}(t, ·) = (1/c*_H) s^{-a} (D^a_{t-} u^a)(s)"""
    a = H - 0.5
    grid = Grid1D(0.0, t, n)
    s = grid.nodes
    phi = SampledFn1D(grid, s ** a)
    return SampledFn1D(grid, s ** (-a) * rl_derivative_right(phi, a).values / c_star(H))


@dataclass(frozen=True)
class KernelCache:
    """
    Pesos densos por eje. Fila i: esquina superior t_i = (i+1)h; columna k: nodo s_k.
    K y K_inv son triangulares inferiores. `whitening` es L·K^{-1}_{matriz}, la inversa
    discreta exacta del coloreado seguida de la acumulación.
    """

    grid: Grid1D
    H: float
    K: np.ndarray = field(repr=False)
    K_inv: np.ndarray = field(repr=False)
    whitening: np.ndarray = field(repr=False)


@lru_cache(maxsize=32)
def kernel_matrices(grid: Grid1D, H: float) -> KernelCache:
    t = grid.edges[1:][:, None]
    s = grid.nodes[None, :]
    mask = np.tril(np.ones((grid.n, grid.n), dtype=bool))
    safe_t = np.where(mask, t, s + grid.h)
    K = np.where(mask, kernel_K_closed(H, safe_t, s), 0.0)
    K_inv = np.where(mask, kernel_K_inv_closed(H, safe_t, s), 0.0)
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(K_inv))):
        raise FactorizationError(f"Núcleos no finitos para H={H}, n={grid.n}")

    ones = np.tril(np.ones((grid.n, grid.n)))
    whitening = solve_triangular(K, ones.T, trans="T", lower=True).T
    for m in (K, K_inv, whitening):
        m.setflags(write=False)
    logger.debug(f"Núcleos en caché: H={H}, n={grid.n}")
    return KernelCache(grid, H, K, K_inv, whitening)


def axis_kernels(grid: Grid2D, hurst: HurstPair) -> tuple[KernelCache, KernelCache]:
    return (
        kernel_matrices(axis_grid(grid, 1), hurst.alpha),
        kernel_matrices(axis_grid(grid, 2), hurst.beta),
    )


# =========================================================
# SIMULACIÓN
# =========================================================

def wiener_increments(grid: Grid2D, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Incrementos i.i.d. N(0, h1·h2) por celda; con size se agrega un eje de lote"""
    shape = grid.shape if size is None else (size,) + grid.shape
    return rng.standard_normal(shape) * np.sqrt(grid.cell_area)


def simulate_wiener_sheet(grid: Grid2D, seed: Seed) -> GaussianFieldSample:
    return GaussianFieldSample.from_increments(grid, wiener_increments(grid, as_generator(seed)))


def simulate_fbs_cholesky(
        grid: Grid2D,
        H: HurstPair,
        seed: Seed,
        max_nodes: int = MAX_CHOLESKY_NODES,
) -> GaussianFieldSample:
    """Muestra exacta en ley: B = Lα Z Lβᵀ con γ_α = Lα Lαᵀ, γ_β = Lβ Lβᵀ en las esquinas"""
    if grid.n1 * grid.n2 > max_nodes:
        raise DomainError(f"Grilla de {grid.n1 * grid.n2} nodos excede el límite Cholesky {max_nodes}")
    model = CovarianceModel("fbs", H)
    L1 = cholesky_factor(model.axis_matrix(grid.corners1, 1))
    L2 = cholesky_factor(model.axis_matrix(grid.corners2, 2))
    Z = as_generator(seed).standard_normal(grid.shape)
    return GaussianFieldSample.from_cumulative(grid, L1 @ Z @ L2.T)


def color_increments(grid: Grid2D, H: HurstPair, increments: np.ndarray) -> np.ndarray:
    """B_z = Σ K_α(z1, s1) K_β(z2, s2) ΔW sobre R_z (admite lotes en los ejes iniciales)"""
    k1, k2 = axis_kernels(grid, H)
    return np.einsum("ik,...kl,jl->...ij", k1.K, increments, k2.K)


def simulate_fbs_kernel(grid: Grid2D, H: HurstPair, wiener: GaussianFieldSample) -> GaussianFieldSample:
    if wiener.grid != grid:
        raise ShapeError(f"Lámina de Wiener en {wiener.grid}, se esperaba {grid}")
    return GaussianFieldSample.from_cumulative(grid, color_increments(grid, H, wiener.increments.values))


def whiten_values(grid: Grid2D, H: HurstPair, cumulative: np.ndarray, rule: str = "kernel") -> np.ndarray:
    """W^Y acumulado a partir de Y acumulado (admite lotes)"""
    k1, k2 = axis_kernels(grid, H)
    if rule == "inverse":
        return np.einsum("ik,...kl,jl->...ij", k1.whitening, cumulative, k2.whitening)
    if rule == "kernel":
        inc = increments_from_cumulative(cumulative)
        return np.einsum("ik,...kl,jl->...ij", k1.K_inv, inc, k2.K_inv)
    raise DomainError(f"Regla de blanqueo desconocida: {rule} (opciones: {WHITENING_RULES})")


def whiten(
        fieldY: Union[GaussianFieldSample, SampledField2D],
        H: HurstPair,
        rule: str = "kernel",
) -> GaussianFieldSample:
    """
    W^Y_z = ∫_{R_z} K^{-1}_{α,β}(z; ζ) dY_ζ.

    rule="kernel" (por omisión) suma K^{-1} muestreado por celda contra los incrementos de Y.
    rule="inverse" invierte exactamente el coloreado discreto, de modo que
    whiten(simulate_fbs_kernel(W), rule="inverse") == W.
    """
    cum = fieldY.cumulative if isinstance(fieldY, GaussianFieldSample) else fieldY
    return GaussianFieldSample.from_cumulative(cum.grid, whiten_values(cum.grid, H, np.asarray(cum.values), rule))


def coarse_grid(grid: Grid2D) -> Grid2D:
    if grid.n1 % 2 or grid.n2 % 2:
        raise ShapeError(f"No se puede engrosar una grilla impar {grid.shape}")
    return Grid2D(grid.T1, grid.T2, grid.n1 // 2, grid.n2 // 2)


def coarsen_increments(grid: Grid2D, increments: np.ndarray) -> np.ndarray:
    """Suma de incrementos en bloques 2x2 sobre los dos últimos ejes"""
    coarse = coarse_grid(grid)
    inc = np.asarray(increments, dtype=float)
    lead = inc.shape[:-2]
    return inc.reshape(lead + (coarse.n1, 2, coarse.n2, 2)).sum(axis=(-3, -1))


def coarsen(sample: GaussianFieldSample) -> GaussianFieldSample:
    """Agrega incrementos en bloques 2x2 (misma realización en la grilla gruesa)"""
    coarse = coarse_grid(sample.grid)
    return GaussianFieldSample.from_increments(coarse, coarsen_increments(sample.grid, sample.increments.values))

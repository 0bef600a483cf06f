"""
Filtros sobre el ensamble de partículas: fórmula de Bayes, evolución de Zakai
a lo largo de una curva monótona y residuo de la ecuación DMZ de dos parámetros.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from fbsfilter.errors import ContractError, DegenerateEnsembleError, DomainError, ShapeError
from fbsfilter.lattice import Grid2D, Point2, cone_sum_separable, low_corner_values
from fbsfilter.model import SdeCoefficients, cellwise, delta_values, euler_sweep, log_likelihood_values

logger = logging.getLogger(__name__)

LOW_NEFF_FRACTION = 0.01


# =========================================================
# FUNCIONES DE PRUEBA
# =========================================================

@dataclass(frozen=True)
class TestFunction:
    """F y sus derivadas F', F'', F''', F'''' (en ese orden)"""

    name: str
    derivatives: tuple[Callable[[np.ndarray], np.ndarray], ...]

    __test__ = False

    def __post_init__(self):
        if len(self.derivatives) != 5:
            raise DomainError(f"{self.name}: se necesitan F y 4 derivadas, hay {len(self.derivatives)}")

    def __call__(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.derivatives[order](x), dtype=float), x.shape)

    def bounds(self, interval: tuple[float, float], points: int = 2001) -> tuple[float, ...]:
        """Sup |F^{(k)}| sobre una grilla densa (sustituto de F ∈ C_b^4)"""
        x = np.linspace(interval[0], interval[1], points)
        return tuple(float(np.max(np.abs(self(x, k)))) for k in range(5))


# =========================================================
# CAMINOS MONÓTONOS
# =========================================================

@dataclass(frozen=True)
class MonotonePath:
    """Escalera de nodos (i, j) desde la celda (0, 0) hasta (n1-1, n2-1)"""

    grid: Grid2D
    nodes: tuple[tuple[int, int], ...]

    def __post_init__(self):
        nodes = tuple((int(i), int(j)) for i, j in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if not nodes or nodes[0] != (0, 0):
            raise ContractError("El camino debe empezar en el nodo (0, 0)")
        if nodes[-1] != (self.grid.n1 - 1, self.grid.n2 - 1):
            raise ContractError(f"El camino debe terminar en ({self.grid.n1 - 1}, {self.grid.n2 - 1})")
        for (i0, j0), (i1, j1) in zip(nodes, nodes[1:]):
            if (i1 - i0, j1 - j0) not in ((1, 0), (0, 1)):
                raise ContractError(f"Paso no escalonado de ({i0}, {j0}) a ({i1}, {j1})")

    @classmethod
    def lower(cls, grid: Grid2D) -> "MonotonePath":
        """Primero a lo largo del eje 1, luego del eje 2"""
        nodes = [(i, 0) for i in range(grid.n1)] + [(grid.n1 - 1, j) for j in range(1, grid.n2)]
        return cls(grid, tuple(nodes))

    @classmethod
    def upper(cls, grid: Grid2D) -> "MonotonePath":
        nodes = [(0, j) for j in range(grid.n2)] + [(i, grid.n2 - 1) for i in range(1, grid.n1)]
        return cls(grid, tuple(nodes))

    @classmethod
    def diagonal(cls, grid: Grid2D) -> "MonotonePath":
        i, j = 0, 0
        nodes = [(0, 0)]
        while (i, j) != (grid.n1 - 1, grid.n2 - 1):
            if j == grid.n2 - 1 or (i < grid.n1 - 1 and (i + 1) / grid.n1 <= (j + 1) / grid.n2):
                i += 1
            else:
                j += 1
            nodes.append((i, j))
        return cls(grid, tuple(nodes))

    @classmethod
    def from_spec(cls, grid: Grid2D, spec: str | Sequence[Sequence[int]]) -> "MonotonePath":
        if isinstance(spec, str):
            builders = {"lower": cls.lower, "upper": cls.upper, "diagonal": cls.diagonal}
            if spec not in builders:
                raise ContractError(f"Camino desconocido: {spec}")
            return builders[spec](grid)
        return cls(grid, tuple(tuple(p) for p in spec))

    def __len__(self) -> int:
        return len(self.nodes)

    def corner(self, m: int) -> Point2:
        i, j = self.nodes[m]
        return Point2((i + 1) * self.grid.h1, (j + 1) * self.grid.h2)

    def step_of_cell(self) -> np.ndarray:
        """Índice del paso en que cada celda entra al rectángulo R_p"""
        i_seq = np.array([p[0] for p in self.nodes])
        j_seq = np.array([p[1] for p in self.nodes])
        first_i = np.searchsorted(i_seq, np.arange(self.grid.n1), side="left")
        first_j = np.searchsorted(j_seq, np.arange(self.grid.n2), side="left")
        return np.maximum(first_i[:, None], first_j[None, :])

    def strip_matrix(self) -> np.ndarray:
        """Matriz (celdas x pasos) con 1 si la celda se agrega en ese paso"""
        steps = self.step_of_cell().ravel()
        S = np.zeros((steps.size, len(self)))
        S[np.arange(steps.size), steps] = 1.0
        return S


def projection_index(path: MonotonePath, z: Point2) -> int:
    tol1 = 1e-9 * path.grid.h1
    tol2 = 1e-9 * path.grid.h2
    for m in range(len(path)):
        c = path.corner(m)
        if c.z1 + tol1 >= z.z1 and c.z2 + tol2 >= z.z2:
            return m
    raise DomainError(f"Punto {z} fuera del dominio del camino")


def path_projection(path: MonotonePath, z: Point2) -> Point2:
    """z_Δ: el menor punto del camino que domina a z"""
    return path.corner(projection_index(path, z))


def path_integral(path: MonotonePath, integrand: np.ndarray, increments: np.ndarray, z0: Point2) -> float:
    """
    ∫ φ dM acumulado por tramos a lo largo de Δ hasta el punto z0 del camino.
    integrand y increments son arreglos por celda.
    """
    stop = projection_index(path, z0)
    if path.corner(stop) != z0:
        raise ContractError(f"{z0} no es un punto del camino")
    per_step = (np.asarray(integrand) * np.asarray(increments)).ravel() @ path.strip_matrix()
    return float(np.sum(per_step[: stop + 1]))


# =========================================================
# ENSAMBLE DE PARTÍCULAS
# =========================================================

@dataclass(frozen=True)
class ParticleEnsemble:
    """
    Partículas i.i.d. de la señal, independientes de Y.
    loglik guarda ℓ = log V^{-1} acumulado por nodo contra el W^Y compartido.
    """

    grid: Grid2D
    x0: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    X_low: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    loglik: np.ndarray = field(repr=False)
    wY_increments: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.X.shape[0]

    def state(self, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
        """(X, ℓ) en la esquina (p*h1, q*h2); sobre los ejes (x0, 0)"""
        if p == 0 or q == 0:
            return self.x0, np.zeros(self.size)
        return self.X[:, p - 1, q - 1], self.loglik[:, p - 1, q - 1]

    @classmethod
    def concatenate(cls, parts: Sequence["ParticleEnsemble"]) -> "ParticleEnsemble":
        first = parts[0]
        for part in parts[1:]:
            if part.grid != first.grid:
                raise ShapeError("Lotes de partículas en grillas distintas")
        return cls(
            first.grid,
            np.concatenate([p.x0 for p in parts]),
            np.concatenate([p.X for p in parts]),
            np.concatenate([p.X_low for p in parts]),
            np.concatenate([p.delta for p in parts]),
            np.concatenate([p.loglik for p in parts]),
            first.wY_increments,
        )


def build_ensemble(
        grid: Grid2D,
        coeffs: SdeCoefficients,
        g: Callable[[np.ndarray], np.ndarray],
        hurst,
        x0: np.ndarray,
        increments: np.ndarray,
        wY_increments: np.ndarray,
) -> ParticleEnsemble:
    x0 = np.asarray(x0, dtype=float)
    if increments.shape != x0.shape + grid.shape:
        raise ShapeError(f"Incrementos {increments.shape} para {x0.shape[0]} partículas en {grid.shape}")
    paths = euler_sweep(coeffs.drift, coeffs.diffusion, x0, increments, grid)
    delta = delta_values(paths.X, g, hurst, grid)
    loglik = -log_likelihood_values(delta, wY_increments, grid.cell_area, "v2")
    return ParticleEnsemble(grid, x0, paths.X, paths.X_low, delta, loglik, np.asarray(wY_increments, dtype=float))


def effective_sample_size(loglik: np.ndarray) -> float:
    w = np.exp(loglik - np.max(loglik))
    return float(np.sum(w) ** 2 / np.sum(w ** 2))


# =========================================================
# FILTRO DE BAYES
# =========================================================

@dataclass(frozen=True)
class BayesEstimate:
    sigma: float
    pi: float
    se: float
    sigma_se: float
    n_eff: float


def jackknife_ratio_se(num: np.ndarray, den: np.ndarray) -> float:
    """Error jackknife de Σnum / Σden dejando una partícula fuera"""
    n = num.size
    total_num = np.sum(num)
    total_den = np.sum(den)
    loo_den = total_den - den
    safe = loo_den != 0
    loo = np.where(safe, (total_num - num) / np.where(safe, loo_den, 1.0), total_num / total_den)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def weighted_estimate(values: np.ndarray, loglik: np.ndarray) -> BayesEstimate:
    if not np.all(np.isfinite(loglik)):
        raise DegenerateEnsembleError("Log-pesos no finitos; aumente N o reduzca el dominio")
    raw = np.exp(loglik)
    if not np.any(raw > 0) or not np.all(np.isfinite(raw)):
        raise DegenerateEnsembleError("Todos los pesos se anulan o desbordan; aumente N o reduzca el dominio")

    weighted = values * raw
    n = values.size
    sigma = float(np.mean(weighted))
    sigma_se = float(np.std(weighted, ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    w = np.exp(loglik - np.max(loglik))
    pi = float(np.sum(values * w) / np.sum(w))
    n_eff = float(np.sum(w) ** 2 / np.sum(w ** 2))
    if n_eff < LOW_NEFF_FRACTION * n:
        logger.warning(f"N_eff bajo: {n_eff:.1f} de {n} partículas")
    return BayesEstimate(sigma, pi, jackknife_ratio_se(values * w, w), sigma_se, n_eff)


def bayes_filter(ensemble: ParticleEnsemble, F: TestFunction, z: Point2) -> BayesEstimate:
    """
    σ_z(F) = (1/N) Σ F(X^i_z) e^{ℓ^i_z}; π_z(F) = σ_z(F) / σ_z(1).
    se es el error jackknife de π.
    """
    p, q = ensemble.grid.snap_corner(z)
    X, ell = ensemble.state(p, q)
    return weighted_estimate(F(X), ell)


# =========================================================
# ZAKAI A LO LARGO DE Δ
# =========================================================

@dataclass(frozen=True)
class ZakaiTrace:
    path: MonotonePath
    sigma0: float
    sigma: np.ndarray = field(repr=False)
    sigma_se: np.ndarray = field(repr=False)
    sigma_one: np.ndarray = field(repr=False)
    pi: np.ndarray = field(repr=False)
    pi_se: np.ndarray = field(repr=False)
    n_eff: np.ndarray = field(repr=False)
    particle_sigma: np.ndarray = field(repr=False)
    particle_one: np.ndarray = field(repr=False)

    def rows(self) -> list[dict]:
        out = []
        for m in range(len(self.path)):
            c = self.path.corner(m)
            out.append({
                "z1": c.z1,
                "z2": c.z2,
                "sigma": float(self.sigma[m]),
                "pi": float(self.pi[m]),
                "se": float(self.pi_se[m]),
                "n_eff": float(self.n_eff[m]),
            })
        return out


def zakai_curve_integrate(
        ensemble: ParticleEnsemble,
        F: TestFunction,
        path: MonotonePath,
        coeffs: SdeCoefficients,
) -> ZakaiTrace:
    """
    Euler-Maruyama a lo largo de la escalera. En cada paso p -> p' se agregan las
    celdas nuevas de R_{p'}; F, F', F'' y los pesos quedan congelados en p, mientras
    ν = a(X_low), η = b(X_low) y δ se evalúan por celda.
    """
    if path.grid != ensemble.grid:
        raise ShapeError(f"Camino en {path.grid}, ensamble en {ensemble.grid}")
    grid = ensemble.grid
    n = ensemble.size
    area = grid.cell_area
    S = path.strip_matrix()

    nu = (cellwise(coeffs.drift, ensemble.X_low) * area).reshape(n, -1) @ S
    eta2 = (cellwise(coeffs.diffusion, ensemble.X_low) ** 2 * area).reshape(n, -1) @ S
    dw = (ensemble.delta * ensemble.wY_increments).reshape(n, -1) @ S

    starts = [ensemble.state(0, 0)] + [ensemble.state(i + 1, j + 1) for i, j in path.nodes[:-1]]
    Xs = np.stack([s[0] for s in starts], axis=1)
    ells = np.stack([s[1] for s in starts], axis=1)
    if not np.all(np.isfinite(ells)):
        raise DegenerateEnsembleError("Log-pesos no finitos a lo largo del camino")
    w = np.exp(ells)

    incF = w * (F(Xs, 1) * nu + 0.5 * F(Xs, 2) * eta2 + F(Xs, 0) * dw)
    cF = F(ensemble.x0)[:, None] + np.cumsum(incF, axis=1)
    c1 = 1.0 + np.cumsum(w * dw, axis=1)

    # una fila contigua por paso: misma suma por pares que bayes_filter
    by_step = np.ascontiguousarray(cF.T)
    sigma = by_step.mean(axis=1)
    sigma_se = by_step.std(axis=1, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(len(path))
    sigma_one = np.ascontiguousarray(c1.T).mean(axis=1)
    pi_se = np.array([jackknife_ratio_se(cF[:, m], c1[:, m]) for m in range(len(path))])
    n_eff = np.array([effective_sample_size(ensemble.state(i + 1, j + 1)[1]) for i, j in path.nodes])
    return ZakaiTrace(
        path=path,
        sigma0=float(np.mean(F(ensemble.x0))),
        sigma=sigma,
        sigma_se=sigma_se,
        sigma_one=sigma_one,
        pi=sigma / sigma_one,
        pi_se=pi_se,
        n_eff=n_eff,
        particle_sigma=cF,
        particle_one=c1,
    )


# =========================================================
# RESIDUO DMZ DE DOS PARÁMETROS
# =========================================================

@dataclass(frozen=True)
class DmzResidual:
    lhs: float
    rhs_terms: tuple[float, ...]
    residual: float
    se: float
    particle_residual: np.ndarray = field(repr=False)


def dmz_2d_residual(
        ensemble: ParticleEnsemble,
        F: TestFunction,
        coeffs: SdeCoefficients,
        z: Point2 | None = None,
) -> DmzResidual:
    """
    lhs = σ_z(F) - σ_0(F) contra los seis términos de la evolución en R_z.
    Integrandos por celda con el estado en la esquina inferior; los pares del cono
    usan el estado en la esquina inferior de la celda join (k, j).
    """
    grid = ensemble.grid
    p, q = grid.snap_corner(z) if z is not None else grid.shape
    area = grid.cell_area
    cut = (slice(None), slice(0, p), slice(0, q))

    X_low = ensemble.X_low[cut]
    ell_low = low_corner_values(ensemble.loglik, 0.0)[cut]
    if not np.all(np.isfinite(ell_low)):
        raise DegenerateEnsembleError("Log-pesos no finitos en R_z")
    e = np.exp(ell_low)
    a = cellwise(coeffs.drift, X_low)
    b2 = cellwise(coeffs.diffusion, X_low) ** 2
    dw = ensemble.delta[cut] * ensemble.wY_increments[:p, :q]

    G = [e * F(X_low, k) for k in range(5)]
    aA = a * area
    b2A = b2 * area

    cone = cone_sum_separable

    t1 = np.sum(G[1] * aA + 0.5 * G[2] * b2A, axis=(-2, -1))
    t2 = np.sum(G[0] * dw, axis=(-2, -1))
    t3 = cone(G[0], dw, dw)
    t4 = cone(G[1], aA, dw) + 0.5 * cone(G[2], b2A, dw)
    t5 = cone(G[1], dw, aA) + 0.5 * cone(G[2], dw, b2A)
    t6 = (
        cone(G[2], aA, aA, boundary=True)
        + 0.5 * (cone(G[3], b2A, aA, boundary=True) + cone(G[3], aA, b2A, boundary=True))
        + 0.25 * cone(G[4], b2A, b2A, boundary=True)
    )

    X_z, ell_z = ensemble.state(p, q)
    lhs = F(X_z) * np.exp(ell_z) - F(ensemble.x0)
    terms = np.stack([t1, t2, t3, t4, t5, t6])
    residual = lhs - terms.sum(axis=0)
    n = ensemble.size
    se = float(np.std(residual, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return DmzResidual(
        lhs=float(np.mean(lhs)),
        rhs_terms=tuple(float(t) for t in terms.mean(axis=1)),
        residual=float(np.mean(residual)),
        se=se,
        particle_residual=residual,
    )

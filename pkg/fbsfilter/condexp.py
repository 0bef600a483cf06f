"""
Chequeos de las identidades de esperanza condicional para integrales dobles
respecto de dos láminas de Wiener independientes W y W^Y.

(i)  Las cinco integrales dobles mixtas con al menos un dW tienen media
     condicional cero dada W^Y: se regresan sobre un diccionario fijo de
     funcionales de W^Y y todos los coeficientes deben quedar dentro de 5 SE.
(ii) Para integrandos simples sobre una grilla de 2x2 celdas con incrementos
     de tipo moneda (±√área) ambos lados se calculan por enumeración exhaustiva.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from fbsfilter.lattice import Grid2D, cone_sum_separable, cumulative_from_increments, low_corner_values
from fbsfilter.rng import Seed, as_generator
from fbsfilter.stats import DEFAULT_SIGMAS, CheckResult, ols_hc0

logger = logging.getLogger(__name__)

EXACT_TOL = 1e-12


@dataclass(frozen=True)
class CondExpReport:
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# =========================================================
# PARTE (i): MEDIA CONDICIONAL CERO
# =========================================================

def adapted_coefficient(W_inc: np.ndarray, WY_inc: np.ndarray) -> np.ndarray:
    """ψ en la esquina inferior de la celda join: medible respecto de F^{W,W^Y}_{z(k,j)}"""
    W_low = low_corner_values(cumulative_from_increments(W_inc), 0.0)
    WY_low = low_corner_values(cumulative_from_increments(WY_inc), 0.0)
    return np.cos(W_low) + 0.5 * WY_low


def mixed_double_integrals(W_inc: np.ndarray, WY_inc: np.ndarray, grid: Grid2D) -> dict[str, np.ndarray]:
    G = adapted_coefficient(W_inc, WY_inc)
    area = np.full(W_inc.shape, grid.cell_area)
    pairs = {
        "dW_dW": (W_inc, W_inc),
        "dW_dz": (W_inc, area),
        "dz_dW": (area, W_inc),
        "dW_dWY": (W_inc, WY_inc),
        "dWY_dW": (WY_inc, W_inc),
    }
    return {name: cone_sum_separable(G, left, right) for name, (left, right) in pairs.items()}


def observation_features(WY_inc: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Intercepto, W^Y en 8 esquinas de prueba y 4 incrementos rectangulares"""
    cum = cumulative_from_increments(WY_inc)
    n1, n2 = grid.shape
    nodes = sorted({
        (n1 - 1, n2 - 1), (n1 // 2, n2 // 2), (0, n2 - 1), (n1 - 1, 0),
        (n1 // 4, (3 * n2) // 4), ((3 * n1) // 4, n2 // 4), (n1 // 2, n2 - 1), (n1 - 1, n2 // 2),
    })
    cols = [np.ones(WY_inc.shape[0])]
    cols += [cum[:, i, j] for i, j in nodes]
    h1, h2 = max(n1 // 2, 1), max(n2 // 2, 1)
    for rows, columns in ((slice(0, h1), slice(0, h2)), (slice(h1, n1), slice(0, h2)),
                          (slice(0, h1), slice(h2, n2)), (slice(h1, n1), slice(h2, n2))):
        cols.append(WY_inc[:, rows, columns].sum(axis=(-2, -1)))
    return np.column_stack(cols)


def mean_zero_checks(
        grid: Grid2D,
        n_samples: int,
        seed: Seed,
        sigmas: float = DEFAULT_SIGMAS,
) -> list[CheckResult]:
    rng = as_generator(seed)
    scale = np.sqrt(grid.cell_area)
    W_inc = rng.standard_normal((n_samples,) + grid.shape) * scale
    WY_inc = rng.standard_normal((n_samples,) + grid.shape) * scale

    features = observation_features(WY_inc, grid)
    results = []
    for name, values in mixed_double_integrals(W_inc, WY_inc, grid).items():
        reg = ols_hc0(values, features)
        z = reg.max_abs_z
        passed = bool(z <= sigmas)
        if not passed:
            logger.warning(f"Integral {name}: coeficiente a {z:.2f} SE de cero")
        results.append(CheckResult(
            f"condexp_mean_zero_{name}", passed, z, sigmas,
            {"mean": float(np.mean(values)), "n": n_samples, "coef": reg.coef.tolist()},
        ))
    return results


# =========================================================
# PARTE (ii): ENUMERACIÓN EXHAUSTIVA
# =========================================================

def _configurations(grid: Grid2D) -> np.ndarray:
    n_cells = grid.n1 * grid.n2
    bits = np.array(list(itertools.product((-1.0, 1.0), repeat=n_cells)))
    return bits.reshape((-1,) + grid.shape) * np.sqrt(grid.cell_area)


def _phi(W_inc: np.ndarray, WY_inc: np.ndarray) -> np.ndarray:
    W_low = low_corner_values(cumulative_from_increments(W_inc), 0.0)
    WY_low = low_corner_values(cumulative_from_increments(WY_inc), 0.0)
    return np.tanh(1.0 + W_low + WY_low)


def _psi(W_inc: np.ndarray, WY_inc: np.ndarray) -> np.ndarray:
    W_low = low_corner_values(cumulative_from_increments(W_inc), 0.0)
    WY_low = low_corner_values(cumulative_from_increments(WY_inc), 0.0)
    return np.cos(W_low) * (1.0 + WY_low ** 2)


def _conditional(table: np.ndarray, wy_configs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    table[w, wy, ...] promediado sobre w y sobre las configuraciones de W^Y que
    coinciden con cada wy en las celdas de mask.
    """
    keys = wy_configs[:, mask]
    out = np.empty(table.shape[1:])
    for idx in range(wy_configs.shape[0]):
        same = np.all(keys == keys[idx], axis=1)
        out[idx] = table[:, same].mean(axis=(0, 1))
    return out


def tower_property_checks(grid: Grid2D | None = None) -> list[CheckResult]:
    """Lado izquierdo E[M | F^{W^Y}_z] contra el integrando proyectado E[ψ | F^{W^Y}_{ζ∨ζ'}]"""
    grid = grid or Grid2D(1.0, 1.0, 2, 2)
    configs = _configurations(grid)
    n_conf = configs.shape[0]
    n1, n2 = grid.shape
    area = grid.cell_area

    # tablas [w, wy, celda] de integrandos adaptados
    W_all = np.repeat(configs[:, None], n_conf, axis=1)
    WY_all = np.repeat(configs[None, :], n_conf, axis=0)
    phi = _phi(W_all, WY_all)
    psi = _psi(W_all, WY_all)
    dWY = WY_all
    area_field = np.full(dWY.shape, area)

    forms = {
        "single_dWY": lambda f: np.sum(f * dWY, axis=(-2, -1)),
        "double_dWY_dWY": lambda f: cone_sum_separable(f, dWY, dWY),
        "double_dz_dWY": lambda f: cone_sum_separable(f, area_field, dWY),
        "double_dWY_dz": lambda f: cone_sum_separable(f, dWY, area_field),
    }
    integrands = {"single_dWY": phi, "double_dWY_dWY": psi, "double_dz_dWY": psi, "double_dWY_dz": psi}

    wy_configs = configs.reshape(n_conf, -1)
    results = []
    for name, integrate in forms.items():
        f = integrands[name]
        lhs = integrate(f).mean(axis=0)

        projected = np.empty(f.shape[1:])
        for i in range(n1):
            for j in range(n2):
                # celdas estrictamente por debajo de la esquina inferior de (i, j)
                mask = np.zeros(grid.shape, dtype=bool)
                mask[:i, :j] = True
                projected[:, i, j] = _conditional(f[..., i, j], wy_configs, mask.ravel())
        rhs = np.asarray(integrate(np.broadcast_to(projected, f.shape)))[0]

        gap = float(np.max(np.abs(lhs - rhs)))
        results.append(CheckResult(f"condexp_tower_{name}", bool(gap <= EXACT_TOL), gap, EXACT_TOL,
                                   {"configurations": int(n_conf * n_conf)}))
    return results


def cond_exp_identities_check(seed: Seed, grid: Grid2D, n_samples: int = 20000) -> CondExpReport:
    checks = mean_zero_checks(grid, n_samples, seed) + tower_property_checks()
    report = CondExpReport(tuple(checks))
    logger.info(f"Identidades de esperanza condicional: {sum(c.passed for c in checks)}/{len(checks)} OK")
    return report

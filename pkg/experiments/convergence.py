"""
Subcomando convergence: estudios de refinamiento de los operadores fraccionarios
y de la identidad ∫K_H δ_h = ∫h de la transformada δ.
"""

import numpy as np
from scipy.special import gamma

from experiment_base import Experiment
from fbsfilter.fraccalc import (
    Grid1D,
    SampledFn1D,
    integral_matrix_left,
    integral_matrix_right,
    rl_derivative_left,
    rl_derivative_right,
    rl_integral_left,
    rl_integral_right,
)
from fbsfilter.export import fmt
from fbsfilter.gaussfield import kernel_K_closed
from fbsfilter.model import delta_1d
from fbsfilter.stats import CheckResult, bound_check, convergence_order, is_decreasing, relative_sup_error

ORDERS = (0.25, 0.5, 0.75)
POWERS = (2.0, 3.0)
SEMIGROUP_PAIRS = ((0.3, 0.4), (0.5, 0.5))
SEMIGROUP_SINE = (0.2, 0.2)
PARTS_POWERS = (0.0, 1.0)
RECIPROCITY_FUNCTIONS = ("cos", "sin")
IDENTITY_HURST = (0.6, 0.75, 0.9)
IDENTITY_FUNCTIONS = {"s": 1.0, "s^0.9": 0.9}
IDENTITY_MAX_N = 512

# lejos del borde singular de los oráculos de derivadas de potencias
ORACLE_MARGIN = 0.1
# errores por debajo de esto son redondeo
ROUNDING_LEVEL = 1e-10
SERIES_TERMS = 12

# φ(t) = Σ c_m t^m / m!, como pares (m, c_m)
SERIES = {
    "t": ((1, 1.0),),
    "sin": tuple((2 * k + 1, (-1.0) ** k) for k in range(SERIES_TERMS)),
    "cos": tuple((2 * k, (-1.0) ** k) for k in range(SERIES_TERMS)),
}


def series_values(t: np.ndarray, name: str, order: float = 0.0) -> np.ndarray:
    """I^order_{0+} φ en forma cerrada término a término (order = 0 da φ)"""
    return sum(c * t ** (m + order) / gamma(m + 1 + order) for m, c in SERIES[name])


# =========================================================
# ORÁCULOS DE POTENCIAS
# =========================================================

def power_identity_errors(n: int, alpha: float, mu: float) -> dict[str, float]:
    """Errores relativos sup de I^α t^μ, D^α t^μ y la versión por la derecha sobre [0, 1]"""
    grid = Grid1D(0.0, 1.0, n)
    t = grid.nodes
    f = SampledFn1D(grid, t ** mu)
    reflected = SampledFn1D(grid, (1.0 - t) ** mu)
    exact_int = gamma(mu + 1) / gamma(mu + alpha + 1) * t ** (mu + alpha)
    exact_der = gamma(mu + 1) / gamma(mu - alpha + 1) * t ** (mu - alpha)
    return {
        "integral_left": relative_sup_error(rl_integral_left(f, alpha).values, exact_int),
        "integral_right": relative_sup_error(rl_integral_right(reflected, alpha).values, exact_int[::-1]),
        "derivative_left": relative_sup_error(rl_derivative_left(f, alpha).values, exact_der),
    }


def power_oracle_checks(levels: list[int], tol: float) -> list[CheckResult]:
    checks = []
    for alpha in ORDERS:
        for mu in POWERS:
            per_level = [power_identity_errors(n, alpha, mu) for n in levels]
            for kind in per_level[0]:
                errors = [e[kind] for e in per_level]
                passed = errors[-1] <= tol and is_decreasing(errors)
                checks.append(CheckResult(
                    f"power_{kind}_a{alpha}_mu{mu}", passed, errors[-1], tol,
                    {"levels": levels, "errors": errors},
                ))
    return checks


def closed_form_errors(n: int, alpha: float = 0.3) -> dict[str, float]:
    """
    Oráculos con exponentes no enteros y constantes sobre [0, 1]:
    I^α t^0.5, D^α t^0.8, D^α 2 y sus espejos por la derecha.
    Las derivadas de t^0.8 se miden a distancia ORACLE_MARGIN del extremo de anclaje.
    """
    grid = Grid1D(0.0, 1.0, n)
    t = grid.nodes
    s = 1.0 - t
    ratio = gamma(1.5) / gamma(1.5 + alpha)
    far_left = t >= ORACLE_MARGIN
    far_right = s >= ORACLE_MARGIN

    der_left = rl_derivative_left(SampledFn1D(grid, t ** (0.5 + alpha)), alpha).values
    der_right = rl_derivative_right(SampledFn1D(grid, s ** (0.5 + alpha)), alpha).values
    constant = SampledFn1D(grid, np.full(n, 2.0))
    return {
        "integral_t0.5": relative_sup_error(
            rl_integral_left(SampledFn1D(grid, t ** 0.5), alpha).values, ratio * t ** (0.5 + alpha)),
        "integral_right_t0.5": relative_sup_error(
            rl_integral_right(SampledFn1D(grid, s ** 0.5), alpha).values, ratio * s ** (0.5 + alpha)),
        "derivative_t0.8": relative_sup_error(der_left[far_left], t[far_left] ** 0.5 / ratio),
        "derivative_right_t0.8": relative_sup_error(der_right[far_right], s[far_right] ** 0.5 / ratio),
        "derivative_constant": relative_sup_error(
            rl_derivative_left(constant, alpha).values, 2.0 * t ** (-alpha) / gamma(1 - alpha)),
        "derivative_right_constant": relative_sup_error(
            rl_derivative_right(constant, alpha).values, 2.0 * s ** (-alpha) / gamma(1 - alpha)),
    }


def closed_form_checks(levels: list[int], tol: float) -> list[CheckResult]:
    per_level = [closed_form_errors(n) for n in levels]
    checks = []
    for kind in per_level[0]:
        errors = [e[kind] for e in per_level]
        converging = is_decreasing(errors) or max(errors) <= ROUNDING_LEVEL
        checks.append(CheckResult(f"oracle_{kind}", errors[-1] <= tol and converging, errors[-1], tol,
                                  {"levels": levels, "errors": errors}))
    return checks


def reciprocity_error(n: int, alpha: float, name: str) -> float:
    """sup |D^α I^α φ - φ| / sup |φ| sobre [0, 1]"""
    grid = Grid1D(0.0, 1.0, n)
    phi = SampledFn1D(grid, series_values(grid.nodes, name))
    back = rl_derivative_left(rl_integral_left(phi, alpha), alpha)
    return relative_sup_error(back.values, phi.values)


def reciprocity_checks(levels: list[int], tol: float) -> list[CheckResult]:
    checks = []
    for alpha in ORDERS:
        for name in RECIPROCITY_FUNCTIONS:
            errors = [reciprocity_error(n, alpha, name) for n in levels]
            passed = errors[-1] <= tol and is_decreasing(errors)
            checks.append(CheckResult(f"reciprocity_a{alpha}_{name}", passed, errors[-1], tol,
                                      {"levels": levels, "errors": errors}))
    return checks


# =========================================================
# LEYES ALGEBRAICAS
# =========================================================

def semigroup_error(n: int, alpha: float, beta: float, name: str = "t") -> float:
    """I^α I^β φ contra la forma cerrada de I^{α+β} φ (φ = t, sin o cos)"""
    grid = Grid1D(0.0, 1.0, n)
    t = grid.nodes
    composed = integral_matrix_left(grid, alpha) @ (integral_matrix_left(grid, beta) @ series_values(t, name))
    return relative_sup_error(composed, series_values(t, name, alpha + beta))


def integration_by_parts(n: int, alpha: float, power: float = 0.0) -> tuple[float, float]:
    """
    ∫ f I^α_{0+} g = ∫ (I^α_{1-} f) g con f(t) = t, g(t) = t^power.
    Devuelve (error relativo contra el valor exacto, brecha entre ambos lados).
    """
    grid = Grid1D(0.0, 1.0, n)
    t = grid.nodes
    g = t ** power
    lhs = grid.h * np.sum(t * (integral_matrix_left(grid, alpha) @ g))
    rhs = grid.h * np.sum((integral_matrix_right(grid, alpha) @ t) * g)
    exact = gamma(power + 1) / (gamma(power + alpha + 1) * (power + alpha + 2))
    error = max(abs(lhs - exact), abs(rhs - exact)) / exact
    return float(error), float(abs(lhs - rhs))


def algebraic_law_checks(levels: list[int], min_order: float, tol: float) -> list[CheckResult]:
    steps = [1.0 / n for n in levels]
    checks = []
    for alpha, beta in SEMIGROUP_PAIRS:
        errors = [semigroup_error(n, alpha, beta) for n in levels]
        order = convergence_order(steps, errors)
        checks.append(CheckResult(f"semigroup_a{alpha}_b{beta}", order >= min_order, order, min_order,
                                  {"errors": errors}))
    alpha, beta = SEMIGROUP_SINE
    checks.append(bound_check(f"semigroup_sin_a{alpha}_b{beta}", semigroup_error(max(levels), alpha, beta, "sin"),
                              tol, n=max(levels)))
    for alpha in ORDERS:
        for power in PARTS_POWERS:
            pairs = [integration_by_parts(n, alpha, power) for n in levels]
            errors = [p[0] for p in pairs]
            order = convergence_order(steps, errors)
            checks.append(CheckResult(f"integration_by_parts_a{alpha}_g{power}", order >= min_order, order,
                                      min_order, {"errors": errors, "side_gap": max(p[1] for p in pairs)}))
    return checks


# =========================================================
# IDENTIDAD DEL NÚCLEO PARA δ
# =========================================================

def kernel_identity_error(n: int, H: float, power: float) -> float:
    """|∫_0^1 K_H(1, s) δ_h(s) ds - ∫_0^1 h| / ∫_0^1 h con h(s) = s^power"""
    grid = Grid1D(0.0, 1.0, n)
    s = grid.nodes
    delta = delta_1d(SampledFn1D(grid, s ** power), H)
    approx = grid.h * float(np.sum(kernel_K_closed(H, 1.0, s) * delta.values))
    exact = 1.0 / (power + 1)
    return abs(approx - exact) / exact


def kernel_identity_checks(levels: list[int], tol: float) -> list[CheckResult]:
    used = [n for n in levels if n <= IDENTITY_MAX_N] or levels[:2]
    checks = []
    for H in IDENTITY_HURST:
        for label, power in IDENTITY_FUNCTIONS.items():
            errors = [kernel_identity_error(n, H, power) for n in used]
            passed = errors[-1] <= tol and is_decreasing(errors)
            checks.append(CheckResult(f"kernel_identity_H{H}_{label}", passed, errors[-1], tol,
                                      {"levels": used, "errors": errors}))
    return checks


def delta_l2_stability(levels: list[int], H: float = 0.75, power: float = 0.9) -> CheckResult:
    """Norma L2 discreta de δ_h estable bajo refinamiento"""
    norms = []
    for n in levels:
        grid = Grid1D(0.0, 1.0, n)
        delta = delta_1d(SampledFn1D(grid, grid.nodes ** power), H)
        norms.append(float(np.sqrt(grid.h * np.sum(delta.values ** 2))))
    drift = abs(norms[-1] - norms[-2]) / norms[-1]
    return bound_check("delta_1d_l2_stable", drift, 1e-2, norms=norms)


def convergence_checks(levels: list[int], tolerances) -> list[CheckResult]:
    return (
        power_oracle_checks(levels, tolerances.fraccalc_sup_error)
        + closed_form_checks(levels, tolerances.fraccalc_sup_error)
        + reciprocity_checks(levels, tolerances.reciprocity_error)
        + algebraic_law_checks(levels, tolerances.min_convergence_order, tolerances.fraccalc_sup_error)
        + kernel_identity_checks(levels, tolerances.kernel_identity_error)
        + [delta_l2_stability(levels)]
    )


class ConvergenceExperiment(Experiment):
    name = "convergence"

    def run_checks(self) -> list[CheckResult]:
        levels = list(self.config.tolerances.refinement_levels)
        if self.fast:
            levels = levels[-2:]
        checks = self.step("Estudios de refinamiento", convergence_checks, levels, self.config.tolerances)
        rows = [{"name": c.name, "levels": c.details.get("levels", levels), "errors": c.details.get("errors", [])}
                for c in checks if "errors" in c.details]
        self.writer.write_text("convergence.csv", _convergence_csv(rows))
        return checks


def _convergence_csv(rows: list[dict]) -> str:
    lines = ["name,n,error"]
    for row in rows:
        for n, err in zip(row["levels"], row["errors"]):
            lines.append(f"{row['name']},{n},{fmt(err)}")
    return "\n".join(lines) + "\n"

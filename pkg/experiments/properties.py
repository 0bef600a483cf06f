"""
Subcomando properties: la batería completa de propiedades del sistema.

Cada chequeo aparece una sola vez en el reporte; --check-level fast reduce el
número de muestras Monte Carlo y de niveles de refinamiento.
"""

from dataclasses import replace

import numpy as np

from experiment_base import Experiment
from experiments.convergence import convergence_checks
from experiments.curve import curve_checks
from experiments.dmz import dmz_checks
from fbsfilter.condexp import cond_exp_identities_check
from fbsfilter.export import field_npz_bytes
from fbsfilter.filtering import bayes_filter
from fbsfilter.gaussfield import (
    CovarianceModel,
    HurstPair,
    axis_kernels,
    cholesky_factor,
    color_increments,
    whiten_values,
    wiener_increments,
)
from fbsfilter.lattice import Grid2D
from fbsfilter.model import SdeCoefficients, SensorFunction, delta_values, euler_sweep, log_likelihood_values
from fbsfilter.registry import COEFFICIENTS, SENSORS, build_function, make_test_function
from fbsfilter.rng import NOISE_STREAM, SIGNAL_STREAM, particle_stream, rng_streams
from fbsfilter.stats import CheckResult, is_decreasing, mean_se, product_moment, z_check
from fbsfilter.suite import Scenario, run_particles, simulate_truth

# pares de esquinas (i, j), (k, l) de una grilla 8x8
SAMPLE_PAIRS = (
    ((7, 7), (7, 7)),
    ((3, 3), (7, 7)),
    ((1, 6), (6, 1)),
    ((2, 5), (5, 5)),
    ((0, 0), (7, 7)),
    ((4, 2), (4, 2)),
)
BIAS_LEVELS = (8, 16, 32)
NORMALIZATION_HURST = ((0.6, 0.6), (0.75, 0.55))
INDEPENDENCE_DRAWS = 100_000


def _small_grid(scenario: Scenario, n: int) -> Grid2D:
    return Grid2D(scenario.grid.T1, scenario.grid.T2, n, n)


def _pair_checks(name: str, samples: np.ndarray, reference: np.ndarray, sigmas: float) -> list[CheckResult]:
    """Covarianza empírica (media cero conocida) contra la ley exacta de las muestras"""
    checks = []
    for (i, j), (k, l) in SAMPLE_PAIRS:
        est, se = product_moment(samples[:, i, j], samples[:, k, l])
        checks.append(z_check(f"{name}_{i}{j}_{k}{l}", est, reference[i, k, j, l], se, sigmas,
                              n=samples.shape[0]))
    return checks


def _outer(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    return np.einsum("ik,jl->ikjl", c1, c2)


# =========================================================
# LEY DE LA LÁMINA Y BLANQUEO
# =========================================================

def _fbs_axes(grid: Grid2D, hurst: HurstPair) -> tuple[np.ndarray, np.ndarray]:
    model = CovarianceModel("fbs", hurst)
    return model.axis_matrix(grid.corners1, 1), model.axis_matrix(grid.corners2, 2)


def _wiener_target(grid: Grid2D) -> np.ndarray:
    return _outer(np.minimum.outer(grid.corners1, grid.corners1), np.minimum.outer(grid.corners2, grid.corners2))


def _difference(n: int) -> np.ndarray:
    return np.eye(n) - np.eye(n, k=-1)


def _whitening_axes(grid: Grid2D, hurst: HurstPair, rule: str) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = axis_kernels(grid, hurst)
    if rule == "inverse":
        return k1.whitening, k2.whitening
    return k1.K_inv @ _difference(grid.n1), k2.K_inv @ _difference(grid.n2)


def coloring_covariance(grid: Grid2D, hurst: HurstPair) -> np.ndarray:
    """Covarianza exacta del coloreado por núcleo en las esquinas: (K Kᵀ h1) ⊗ (K Kᵀ h2)"""
    k1, k2 = axis_kernels(grid, hurst)
    return _outer(k1.K @ k1.K.T * grid.h1, k2.K @ k2.K.T * grid.h2)


def whitened_covariance(grid: Grid2D, hurst: HurstPair, rule: str) -> np.ndarray:
    """Covarianza exacta del blanqueo aplicado a la lámina fraccionaria continua"""
    g1, g2 = _fbs_axes(grid, hurst)
    a1, a2 = _whitening_axes(grid, hurst, rule)
    return _outer(a1 @ g1 @ a1.T, a2 @ g2 @ a2.T)


def coloring_bias(grid: Grid2D, hurst: HurstPair) -> float:
    """sup |ley discreta del coloreado - R_α ⊗ R_β| sobre pares de esquinas"""
    g1, g2 = _fbs_axes(grid, hurst)
    return float(np.max(np.abs(coloring_covariance(grid, hurst) - _outer(g1, g2))))


def whitening_bias(grid: Grid2D, hurst: HurstPair, rule: str) -> float:
    """sup |ley discreta del campo blanqueado - min(t,t')·min(s,s')| sobre pares de esquinas"""
    return float(np.max(np.abs(whitened_covariance(grid, hurst, rule) - _wiener_target(grid))))


def bias_refinement_check(name: str, bias_fn, base: Grid2D, *args, levels=BIAS_LEVELS) -> CheckResult:
    """El sesgo de discretización debe bajar estrictamente al refinar la grilla"""
    biases = [bias_fn(Grid2D(base.T1, base.T2, n, n), *args) for n in levels]
    return CheckResult(name, is_decreasing(biases), biases[-1], biases[0], {"levels": list(levels), "biases": biases})


def fbs_law_checks(grid: Grid2D, hurst: HurstPair, n: int, seed: int, sigmas: float) -> list[CheckResult]:
    g1, g2 = _fbs_axes(grid, hurst)
    rng = rng_streams(seed, NOISE_STREAM)
    L1, L2 = cholesky_factor(g1), cholesky_factor(g2)
    chol = np.einsum("ik,nkl,jl->nij", L1, rng.standard_normal((n,) + grid.shape), L2)
    checks = _pair_checks("fbs_cholesky_cov", chol, _outer(g1, g2), sigmas)

    kernel = color_increments(grid, hurst, wiener_increments(grid, rng, n))
    checks += _pair_checks("fbs_kernel_cov", kernel, coloring_covariance(grid, hurst), sigmas)
    checks.append(bias_refinement_check("fbs_kernel_bias_refinement", coloring_bias, grid, hurst))
    return checks


def whitening_checks(grid: Grid2D, hurst: HurstPair, rule: str, n: int, seed: int, sigmas: float) -> list[CheckResult]:
    g1, g2 = _fbs_axes(grid, hurst)
    rng = rng_streams(seed, NOISE_STREAM)
    B = np.einsum("ik,nkl,jl->nij", cholesky_factor(g1), rng.standard_normal((n,) + grid.shape), cholesky_factor(g2))
    whitened = whiten_values(grid, hurst, B, rule)

    checks = _pair_checks(f"whitened_cov_{rule}", whitened, whitened_covariance(grid, hurst, rule), sigmas)
    checks.append(bias_refinement_check(f"whitened_bias_refinement_{rule}", whitening_bias, grid, hurst, rule))
    return checks


# =========================================================
# NORMALIZACIÓN DE V Y ORÁCULO CONJUGADO
# =========================================================

def normalization_checks(scenario: Scenario, n: int, sigmas: float) -> list[CheckResult]:
    """E[V_T] = 1 con V en la forma que usa el ruido verdadero W^B"""
    grid = _small_grid(scenario, 8)
    checks = []
    for alpha, beta in NORMALIZATION_HURST:
        hurst = HurstPair(alpha, beta)
        rng = particle_stream(scenario.master_seed, 0)
        x0 = np.full(n, scenario.x0_mean)
        X = euler_sweep(scenario.coeffs.drift, scenario.coeffs.diffusion, x0, wiener_increments(grid, rng, n), grid).X
        delta = delta_values(X, scenario.sensor.g, hurst, grid)
        dWB = wiener_increments(grid, rng_streams(scenario.master_seed, NOISE_STREAM), n)
        V = np.exp(log_likelihood_values(delta, dWB, grid.cell_area, "v1")[:, -1, -1])
        est, se = mean_se(V)
        checks.append(z_check(f"likelihood_mean_one_a{alpha}_b{beta}", est, 1.0, se, sigmas, n=n))
    return checks


def conjugate_scenario(scenario: Scenario) -> Scenario:
    zero = build_function(COEFFICIENTS, "zero")
    return replace(
        scenario,
        coeffs=SdeCoefficients(zero, zero, scenario.x0_mean),
        sensor=SensorFunction(build_function(SENSORS, "linear", {"slope": 1.0}), 1.0),
        x0_law="normal",
        x0_std=scenario.x0_std or 1.0,
        test_functions=(make_test_function("identity"),),
        degenerate=False,
    )


def conjugate_check(scenario: Scenario, jobs: int, sigmas: float) -> CheckResult:
    """
    X ≡ x0 ~ N(m, s²) y g(x) = x: δ = x0·d con d el δ de g ≡ 1, y la posterior de x0
    dado W^Y es normal con precisión 1/s² + Σd²A y media (m/s² + Σ d ΔW^Y) / precisión.
    """
    sc = conjugate_scenario(scenario)
    grid = sc.grid
    truth = simulate_truth(sc)
    ensemble = run_particles(sc, truth.WY.increments.values, jobs)
    est = bayes_filter(ensemble, sc.test_functions[0], grid.top_right)

    d = delta_values(np.ones(grid.shape), sc.sensor.g, sc.hurst, grid)
    dWY = np.asarray(truth.WY.increments.values)
    precision = 1.0 / sc.x0_std ** 2 + np.sum(d ** 2) * grid.cell_area
    mean = (sc.x0_mean / sc.x0_std ** 2 + np.sum(d * dWY)) / precision
    return z_check("conjugate_posterior_mean", est.pi, mean, est.se, sigmas,
                   posterior_std=float(precision ** -0.5), n_eff=est.n_eff)


# =========================================================
# CONSISTENCIA DE LOS FILTROS
# =========================================================

def degenerate_scenario(scenario: Scenario) -> Scenario:
    zero = build_function(COEFFICIENTS, "zero")
    return replace(
        scenario,
        coeffs=SdeCoefficients(zero, zero, scenario.x0_mean),
        sensor=SensorFunction(build_function(SENSORS, "zero"), scenario.sensor.holder_order),
        degenerate=True,
    )


def filter_consistency_checks(scenario: Scenario, jobs: int, sigmas: float) -> list[CheckResult]:
    checks = []
    for prefix, sc in (("curve", scenario), ("curve_degenerate", degenerate_scenario(scenario))):
        truth = simulate_truth(sc)
        ensemble = run_particles(sc, truth.WY.increments.values, jobs)
        checks += curve_checks(ensemble, sc, sigmas, prefix=prefix)
    return checks


def determinism_check(scenario: Scenario) -> CheckResult:
    first = simulate_truth(scenario)
    second = simulate_truth(scenario)
    same_fields = field_npz_bytes(first.WY) == field_npz_bytes(second.WY)
    sc = scenario.with_particles(min(scenario.n_particles, 200))
    same_weights = np.array_equal(
        run_particles(sc, first.WY.increments.values).loglik,
        run_particles(sc, second.WY.increments.values, jobs=2).loglik,
    )
    passed = bool(same_fields and same_weights)
    return CheckResult("determinism_repeat", passed, float(not passed), 0.0,
                       {"fields": bool(same_fields), "weights": bool(same_weights)})


def stream_independence_check(seed: int, sigmas: float) -> CheckResult:
    a = rng_streams(seed, SIGNAL_STREAM).standard_normal(INDEPENDENCE_DRAWS)
    b = rng_streams(seed, NOISE_STREAM).standard_normal(INDEPENDENCE_DRAWS)
    corr = float(np.mean(a * b))
    bound = sigmas / np.sqrt(INDEPENDENCE_DRAWS)
    return CheckResult("rng_stream_independence", abs(corr) <= bound, abs(corr), bound)


class PropertiesExperiment(Experiment):
    name = "properties"

    def run_checks(self) -> list[CheckResult]:
        sc = self.scenario
        tol = self.config.tolerances
        mc = tol.fast_mc_samples if self.fast else tol.mc_samples
        particles = max(mc // 4, 10)
        levels = list(tol.refinement_levels)[-2:] if self.fast else list(tol.refinement_levels)
        seed = sc.master_seed
        grid8 = _small_grid(sc, 8)
        jobs = self.settings.jobs
        sigmas = self.sigmas

        checks = []
        checks += self.step("Operadores fraccionarios e identidad de δ", convergence_checks, levels, tol)
        checks += self.step("Ley de la lámina fraccionaria", fbs_law_checks, grid8, sc.hurst, mc, seed, sigmas)
        checks += self.step("Blanqueo", whitening_checks, grid8, sc.hurst, sc.whitening, mc, seed, sigmas)
        checks += self.step("Normalización de V", normalization_checks, sc, mc, sigmas)
        curve_sc = sc.with_grid(_small_grid(sc, 16)).with_particles(particles)
        checks += self.step("Zakai contra Bayes", filter_consistency_checks, curve_sc, jobs, sigmas)
        checks.append(self.step("Oráculo conjugado", conjugate_check, curve_sc, jobs, sigmas))
        dmz_sc = sc.with_grid(grid8).with_particles(particles)
        checks += self.step("Residuo DMZ", dmz_checks, dmz_sc, sigmas, jobs)
        condexp = self.step("Esperanzas condicionales", cond_exp_identities_check,
                            seed, _small_grid(sc, 4), mc)
        checks += list(condexp.checks)
        checks.append(self.step("Independencia de streams", stream_independence_check, seed, sigmas))
        checks.append(self.step("Determinismo", determinism_check, sc))
        return checks

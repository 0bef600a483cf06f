"""
Tubería de una corrida: arma el escenario desde la configuración, simula la
realización verdadera (W, X, B, Y, W^Y) y construye el ensamble de partículas
por lotes.

Streams: 1 -> W de la señal (y x0 si su ley es aleatoria), 2 -> ruido de B,
3 + b -> lote de partículas b. El resultado no depende de --jobs.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from fbsfilter.config import ExperimentConfig
from fbsfilter.errors import ConfigError, ContractError
from fbsfilter.filtering import MonotonePath, ParticleEnsemble, TestFunction, build_ensemble
from fbsfilter.gaussfield import (
    GaussianFieldSample,
    HurstPair,
    coarsen_increments,
    simulate_fbs_cholesky,
    simulate_fbs_kernel,
    whiten,
    wiener_increments,
)
from fbsfilter.lattice import Grid2D, SampledField2D
from fbsfilter.model import (
    DeltaField,
    LikelihoodState,
    SdeCoefficients,
    SensorFunction,
    delta_2d,
    euler_sweep,
    likelihood,
    make_observation,
)
from fbsfilter.registry import COEFFICIENTS, SENSORS, build_function, is_zero, make_test_function
from fbsfilter.rng import NOISE_STREAM, SIGNAL_STREAM, particle_stream, rng_streams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scenario:
    grid: Grid2D
    hurst: HurstPair
    coeffs: SdeCoefficients
    sensor: SensorFunction
    x0_law: str
    x0_mean: float
    x0_std: float
    test_functions: tuple[TestFunction, ...]
    paths: tuple[MonotonePath, ...]
    path_names: tuple[str, ...]
    whitening: str
    noise_route: str
    master_seed: int
    n_particles: int
    batch_size: int
    degenerate: bool = False

    def with_grid(self, grid: Grid2D) -> "Scenario":
        names = ("lower", "upper", "diagonal")
        paths = tuple(MonotonePath.from_spec(grid, name) for name in names)
        return replace(self, grid=grid, paths=paths, path_names=names)

    def with_particles(self, n_particles: int) -> "Scenario":
        return replace(self, n_particles=n_particles)


def _build_paths(grid: Grid2D, specs) -> tuple[MonotonePath, ...]:
    try:
        return tuple(MonotonePath.from_spec(grid, spec) for spec in specs)
    except ContractError as e:
        raise ConfigError(f"filter.paths inválido: {e}", [f"filter.paths: {e}"]) from e


def build_scenario(config: ExperimentConfig) -> Scenario:
    grid = Grid2D(config.grid.T1, config.grid.T2, config.grid.n1, config.grid.n2)
    hurst = HurstPair(config.hurst.alpha, config.hurst.beta)
    sde = config.sde
    coeffs = SdeCoefficients(
        build_function(COEFFICIENTS, sde.drift.name, sde.drift.params),
        build_function(COEFFICIENTS, sde.diffusion.name, sde.diffusion.params),
        sde.x0.mean,
    )
    sensor = SensorFunction(
        build_function(SENSORS, config.sensor.g.name, config.sensor.g.params),
        config.sensor.holder_order,
    )
    sensor.require_a1(hurst)
    degenerate = (
        is_zero(config.sensor.g.name, config.sensor.g.params)
        and is_zero(sde.drift.name, sde.drift.params)
        and is_zero(sde.diffusion.name, sde.diffusion.params)
    )
    return Scenario(
        grid=grid,
        hurst=hurst,
        coeffs=coeffs,
        sensor=sensor,
        x0_law=sde.x0.law,
        x0_mean=sde.x0.mean,
        x0_std=sde.x0.std,
        test_functions=tuple(make_test_function(name) for name in config.filter.test_functions),
        paths=_build_paths(grid, config.filter.paths),
        path_names=tuple(spec if isinstance(spec, str) else f"path{k}" for k, spec in enumerate(config.filter.paths)),
        whitening=config.filter.whitening,
        noise_route=config.filter.noise_route,
        master_seed=config.seeds.master,
        n_particles=config.filter.n_particles,
        batch_size=config.filter.batch_size,
        degenerate=degenerate,
    )


def sample_x0(scenario: Scenario, rng: np.random.Generator, size: int) -> np.ndarray:
    if scenario.x0_law == "normal":
        return scenario.x0_mean + scenario.x0_std * rng.standard_normal(size)
    return np.full(size, scenario.x0_mean)


# =========================================================
# REALIZACIÓN VERDADERA
# =========================================================

@dataclass(frozen=True)
class Truth:
    W: GaussianFieldSample = field(repr=False)
    X: SampledField2D = field(repr=False)
    B: GaussianFieldSample = field(repr=False)
    WB: GaussianFieldSample = field(repr=False)
    Y: SampledField2D = field(repr=False)
    WY: GaussianFieldSample = field(repr=False)
    delta: DeltaField = field(repr=False)
    likelihood: LikelihoodState = field(repr=False)


def simulate_truth(scenario: Scenario) -> Truth:
    grid = scenario.grid
    signal_rng = rng_streams(scenario.master_seed, SIGNAL_STREAM)
    W = GaussianFieldSample.from_increments(grid, wiener_increments(grid, signal_rng))
    x0 = sample_x0(scenario, signal_rng, 1)[0]
    X = SampledField2D(grid, euler_sweep(scenario.coeffs.drift, scenario.coeffs.diffusion, x0, W.increments.values, grid).X)

    noise_rng = rng_streams(scenario.master_seed, NOISE_STREAM)
    if scenario.noise_route == "cholesky":
        B = simulate_fbs_cholesky(grid, scenario.hurst, noise_rng)
        WB = whiten(B, scenario.hurst, "inverse")
    else:
        WB = GaussianFieldSample.from_increments(grid, wiener_increments(grid, noise_rng))
        B = simulate_fbs_kernel(grid, scenario.hurst, WB)

    Y = make_observation(X, scenario.sensor, B)
    WY = whiten(Y, scenario.hurst, scenario.whitening)
    delta = delta_2d(X, scenario.sensor, scenario.hurst)
    state = likelihood(delta, WY, WB)
    logger.info(f"Realización simulada en {grid.shape} (ruido por {scenario.noise_route}, blanqueo {scenario.whitening})")
    return Truth(W, X, B, WB, Y, WY, delta, state)


# =========================================================
# PARTÍCULAS
# =========================================================

def batch_sizes(n_particles: int, batch_size: int) -> list[int]:
    n_batches = math.ceil(n_particles / batch_size)
    return [min(batch_size, n_particles - b * batch_size) for b in range(n_batches)]


def particle_batch(scenario: Scenario, wY_increments: np.ndarray, batch: int, size: int) -> ParticleEnsemble:
    rng = particle_stream(scenario.master_seed, batch)
    x0 = sample_x0(scenario, rng, size)
    increments = wiener_increments(scenario.grid, rng, size)
    return build_ensemble(
        scenario.grid, scenario.coeffs, scenario.sensor.g, scenario.hurst, x0, increments, wY_increments,
    )


def run_particles(scenario: Scenario, wY_increments: np.ndarray, jobs: int = 1) -> ParticleEnsemble:
    """Lotes independientes, concatenados siempre en orden de lote"""
    wY = np.asarray(wY_increments, dtype=float)
    parts = _in_batches(scenario, lambda b, size: particle_batch(scenario, wY, b, size), jobs)
    logger.info(f"Ensamble: {scenario.n_particles} partículas en {len(parts)} lotes")
    return ParticleEnsemble.concatenate(parts)


def _in_batches(scenario: Scenario, work, jobs: int) -> list:
    sizes = batch_sizes(scenario.n_particles, scenario.batch_size)
    if jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda b: work(b, sizes[b]), range(len(sizes))))
    return [work(b, size) for b, size in enumerate(sizes)]


def refinement_pair(scenario: Scenario, jobs: int = 1) -> tuple[ParticleEnsemble, ParticleEnsemble]:
    """
    Ensambles en la grilla del escenario y en su refinamiento, con las mismas
    partículas y el mismo W^Y (incrementos finos agregados en bloques 2x2).
    """
    coarse = scenario.grid
    fine_scenario = scenario.with_grid(coarse.refine())
    fine = fine_scenario.grid
    wY_fine = simulate_truth(fine_scenario).WY.increments.values
    wY_coarse = coarsen_increments(fine, wY_fine)

    def work(b: int, size: int) -> tuple[ParticleEnsemble, ParticleEnsemble]:
        rng = particle_stream(scenario.master_seed, b)
        x0 = sample_x0(scenario, rng, size)
        inc = wiener_increments(fine, rng, size)
        args = (scenario.coeffs, scenario.sensor.g, scenario.hurst, x0)
        return (
            build_ensemble(fine, *args, inc, wY_fine),
            build_ensemble(coarse, *args, coarsen_increments(fine, inc), wY_coarse),
        )

    parts = _in_batches(scenario, work, jobs)
    return (
        ParticleEnsemble.concatenate([p[0] for p in parts]),
        ParticleEnsemble.concatenate([p[1] for p in parts]),
    )

"""
Tests del modelo: barrido de Euler, transformada δ y verosimilitud
"""

import numpy as np
import pytest

from experiments.convergence import kernel_identity_error
from experiments.properties import normalization_checks
from fbsfilter.errors import BlowUpError, DomainError, ShapeError
from fbsfilter.fraccalc import Grid1D, SampledFn1D
from fbsfilter.gaussfield import GaussianFieldSample, HurstPair, simulate_wiener_sheet
from fbsfilter.lattice import Grid2D, SampledField2D, cumulative_from_increments
from fbsfilter.model import (
    SdeCoefficients,
    SensorFunction,
    a2_surrogate,
    delta_1d,
    delta_2d,
    delta_values,
    euler_sweep,
    g_star,
    holder_surrogate,
    likelihood,
    log_likelihood_values,
    make_observation,
    simulate_signal,
)
from fbsfilter.registry import COEFFICIENTS, SENSORS, build_function


def zero(x):
    return np.zeros_like(x)


def test_euler_with_constant_diffusion_is_scaled_sheet(grid8):
    W = simulate_wiener_sheet(grid8, 4)
    coeffs = SdeCoefficients(zero, lambda x: np.full_like(x, 0.5), 1.5)
    X = simulate_signal(coeffs, W, grid8)
    np.testing.assert_allclose(X.values, 1.5 + 0.5 * np.asarray(W.cumulative.values), atol=1e-12)


def test_euler_with_constant_drift(grid8):
    paths = euler_sweep(lambda x: np.full_like(x, 2.0), zero, 0.0, np.zeros(grid8.shape), grid8)
    counts = np.outer(np.arange(1, 9), np.arange(1, 9))
    np.testing.assert_allclose(paths.X, 2.0 * counts * grid8.cell_area, rtol=1e-12)


def test_euler_low_corner_state(grid8):
    rng = np.random.default_rng(2)
    inc = rng.standard_normal((3,) + grid8.shape) * 0.1
    x0 = np.array([0.0, 1.0, -1.0])
    paths = euler_sweep(np.sin, np.cos, x0, inc, grid8)
    assert paths.X.shape == (3, 8, 8)
    np.testing.assert_array_equal(paths.X_low[:, 1:, 1:], paths.X[:, :-1, :-1])
    np.testing.assert_array_equal(paths.X_low[:, 0, :], np.repeat(x0[:, None], 8, axis=1))


def test_euler_blow_up_reports_node(grid8):
    with pytest.raises(BlowUpError) as info:
        euler_sweep(lambda x: np.full_like(x, np.inf), zero, 0.0, np.zeros(grid8.shape), grid8)
    assert info.value.node == (0, 0)


def test_euler_rejects_wrong_shape(grid8):
    with pytest.raises(ShapeError):
        euler_sweep(zero, zero, 0.0, np.zeros((4, 4)), grid8)


def test_condition_a1():
    sensor = SensorFunction(np.sin, 0.4)
    assert sensor.satisfies_a1(HurstPair(0.6, 0.65))
    assert not sensor.satisfies_a1(HurstPair(0.6, 0.75))
    with pytest.raises(DomainError):
        sensor.require_a1(HurstPair(0.9, 0.6))


def test_holder_and_lipschitz_surrogates():
    rng = np.random.default_rng(0)
    check = holder_surrogate(np.sin, 1.0, (-3.0, 3.0), rng)
    assert check.passed and check.constant <= 1.0
    steep = SdeCoefficients(lambda x: 1e6 * x, zero)
    assert not steep.lipschitz_check((-1.0, 1.0), rng).passed


def test_delta_reduces_to_sensor_in_wiener_case(grid8):
    X = np.random.default_rng(3).standard_normal(grid8.shape)
    delta = delta_values(X, np.sin, HurstPair.formal(0.5, 0.5), grid8)
    np.testing.assert_allclose(delta, np.sin(X), rtol=1e-12)


def test_delta_1d_wiener_case():
    grid = Grid1D(0.0, 1.0, 16)
    h = SampledFn1D.from_function(grid, np.cos)
    np.testing.assert_allclose(delta_1d(h, 0.5).values, h.values)


def test_delta_batch_matches_single(grid8, hurst):
    rng = np.random.default_rng(5)
    X = rng.standard_normal((4,) + grid8.shape)
    batch = delta_values(X, np.sin, hurst, grid8)
    np.testing.assert_allclose(batch[2], delta_values(X[2], np.sin, hurst, grid8), rtol=1e-12)


def test_delta_field_records_norm(grid8, hurst):
    X = SampledField2D.from_function(grid8, lambda z1, z2: z1 * z2)
    delta = delta_2d(X, SensorFunction(np.sin, 1.0), hurst)
    values = np.asarray(delta.values.values)
    assert delta.l2_norm == pytest.approx(float(np.sqrt(np.sum(values ** 2) * grid8.cell_area)))
    assert g_star(X, SensorFunction(np.sin, 1.0), hurst).grid == grid8


@pytest.mark.slow
@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_kernel_identity(H):
    assert kernel_identity_error(512, H, 1.0) <= 2e-2
    assert kernel_identity_error(512, H, 0.9) <= 2e-2


def test_a2_surrogate():
    grid = Grid2D(1.0, 1.0, 4, 4)
    assert a2_surrogate(np.ones((3, 4, 4)), grid) == pytest.approx(1.0)


def test_observation_without_sensor_is_noise(grid8):
    noise = simulate_wiener_sheet(grid8, 9)
    X = SampledField2D(grid8, np.zeros(grid8.shape))
    Y = make_observation(X, SensorFunction(build_function(SENSORS, "zero"), 1.0), noise)
    np.testing.assert_array_equal(Y.values, noise.cumulative.values)


def test_likelihood_forms_agree_on_consistent_noise(grid8):
    rng = np.random.default_rng(8)
    delta = rng.standard_normal(grid8.shape)
    dWB = rng.standard_normal(grid8.shape) * np.sqrt(grid8.cell_area)
    dWY = dWB + delta * grid8.cell_area
    v2 = log_likelihood_values(delta, dWY, grid8.cell_area, "v2")
    v1 = log_likelihood_values(delta, dWB, grid8.cell_area, "v1")
    np.testing.assert_allclose(v2, v1, atol=1e-12)
    with pytest.raises(DomainError):
        log_likelihood_values(delta, dWY, grid8.cell_area, "v3")


def test_likelihood_state(grid8, hurst):
    X = SampledField2D(grid8, np.zeros(grid8.shape))
    delta = delta_2d(X, SensorFunction(build_function(SENSORS, "zero"), 1.0), hurst)
    wY = simulate_wiener_sheet(grid8, 1)
    state = likelihood(delta, wY, wY)
    assert np.all(np.asarray(state.logV.values) == 0.0)
    assert state.v1_v2_gap == 0.0
    np.testing.assert_array_equal(state.logV_inv, -np.asarray(state.logV.values))

    other = GaussianFieldSample.from_increments(Grid2D(1.0, 1.0, 4, 4), np.zeros((4, 4)))
    with pytest.raises(ShapeError):
        likelihood(delta, other)


def test_registry_coefficients_are_broadcast(grid8):
    X = np.random.default_rng(0).standard_normal((2,) + grid8.shape)
    paths = euler_sweep(
        build_function(COEFFICIENTS, "zero"),
        build_function(COEFFICIENTS, "constant", {"c": 1.0}),
        0.0,
        np.diff(X, axis=0, prepend=0.0),
        grid8,
    )
    np.testing.assert_allclose(paths.X, cumulative_from_increments(np.diff(X, axis=0, prepend=0.0)), atol=1e-12)


@pytest.mark.slow
def test_likelihood_has_unit_mean(scenario):
    checks = normalization_checks(scenario, 20000, 5.0)
    assert len(checks) == 2
    assert all(c.passed for c in checks), [c.to_dict() for c in checks]

"""
Tests de las identidades de esperanza condicional
"""

import numpy as np
import pytest

from fbsfilter.condexp import (
    EXACT_TOL,
    adapted_coefficient,
    cond_exp_identities_check,
    mixed_double_integrals,
    observation_features,
    tower_property_checks,
)
from fbsfilter.lattice import Grid2D


def test_tower_property_is_exact_on_coin_increments():
    checks = tower_property_checks()
    assert len(checks) == 4
    for check in checks:
        assert check.passed, check.to_dict()
        assert check.statistic <= EXACT_TOL
        assert check.details["configurations"] == 256


def test_adapted_coefficient_uses_strict_past():
    grid = Grid2D(1.0, 1.0, 3, 3)
    W = np.zeros((1,) + grid.shape)
    WY = np.zeros((1,) + grid.shape)
    WY[0, 2, 2] = 5.0
    # un incremento en la última celda no afecta a ningún coeficiente
    np.testing.assert_array_equal(adapted_coefficient(W, WY), np.ones((1, 3, 3)))


def test_mixed_integrals_and_features_shapes():
    grid = Grid2D(1.0, 1.0, 4, 4)
    rng = np.random.default_rng(0)
    W = rng.standard_normal((10,) + grid.shape) * 0.25
    WY = rng.standard_normal((10,) + grid.shape) * 0.25
    integrals = mixed_double_integrals(W, WY, grid)
    assert set(integrals) == {"dW_dW", "dW_dz", "dz_dW", "dW_dWY", "dWY_dW"}
    assert all(v.shape == (10,) for v in integrals.values())
    assert observation_features(WY, grid).shape == (10, 13)


@pytest.mark.slow
def test_mean_zero_identities():
    report = cond_exp_identities_check(7, Grid2D(1.0, 1.0, 4, 4), 20000)
    assert len(report.checks) == 9
    assert report.passed, [c.name for c in report.checks if not c.passed]

"""
Tests de las utilidades estadísticas
"""

import numpy as np
import pytest

from fbsfilter.errors import ShapeError
from fbsfilter.stats import (
    CheckResult,
    bound_check,
    convergence_order,
    is_decreasing,
    mean_se,
    ols_hc0,
    product_moment,
    relative_sup_error,
    z_check,
)


def test_z_check_threshold():
    ok = z_check("ok", 1.04, 1.0, 0.01, sigmas=5.0)
    assert ok.passed and ok.threshold == pytest.approx(0.05)
    bad = z_check("bad", 1.2, 1.0, 0.01, sigmas=5.0, allowance=0.1)
    assert not bad.passed
    assert bad.details["target"] == 1.0


def test_bound_check_and_serialization():
    check = bound_check("b", 2.0, 1.0, note="x")
    assert not check.passed
    assert check.to_dict() == {"name": "b", "passed": False, "statistic": 2.0, "threshold": 1.0,
                               "details": {"note": "x"}}
    assert isinstance(check, CheckResult)


def test_mean_se():
    mean, se = mean_se(np.array([1.0, 3.0]))
    assert mean == 2.0
    assert se == pytest.approx(1.0)
    assert mean_se(np.array([4.0])) == (4.0, 0.0)
    est, _ = product_moment(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    assert est == 5.5


def test_relative_sup_error():
    assert relative_sup_error(np.array([1.1, 2.0]), np.array([1.0, 2.0])) == pytest.approx(0.05)
    assert relative_sup_error(np.array([0.5]), np.array([0.0])) == 0.5


def test_convergence_order_of_power_law():
    steps = np.array([0.1, 0.05, 0.025])
    assert convergence_order(steps, 3.0 * steps ** 2) == pytest.approx(2.0)
    with pytest.raises(ShapeError):
        convergence_order(steps, steps[:2])


def test_is_decreasing():
    assert is_decreasing([3.0, 2.0, 1.0])
    assert not is_decreasing([3.0, 3.0, 1.0])


def test_ols_hc0_recovers_exact_line():
    x = np.linspace(0.0, 1.0, 20)
    features = np.column_stack([np.ones_like(x), x])
    result = ols_hc0(2.0 + 3.0 * x, features)
    np.testing.assert_allclose(result.coef, [2.0, 3.0], atol=1e-10)
    assert np.all(result.se < 1e-8)
    with pytest.raises(ShapeError):
        ols_hc0(x[:5], features)

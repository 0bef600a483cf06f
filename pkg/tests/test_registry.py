"""
Tests de los registros de funciones
"""

import numpy as np
import pytest

from fbsfilter.errors import ConfigError
from fbsfilter.registry import COEFFICIENTS, SENSORS, TEST_FUNCTIONS, build_function, is_zero, make_test_function


def test_build_function():
    f = build_function(SENSORS, "sin", {"amplitude": 2.0})
    assert float(f(np.pi / 2)) == pytest.approx(2.0)
    assert float(build_function(COEFFICIENTS, "linear", {"slope": 3.0, "intercept": 1.0})(2.0)) == 7.0
    with pytest.raises(ConfigError):
        build_function(COEFFICIENTS, "exp")


@pytest.mark.parametrize("name,params,expected", [
    ("zero", {}, True),
    ("constant", {"c": 0.0}, True),
    ("constant", {}, False),
    ("sin", {"amplitude": 0.0}, True),
    ("linear", {"slope": 0.0}, True),
    ("linear", {"slope": 0.0, "intercept": 1.0}, False),
])
def test_is_zero(name, params, expected):
    assert is_zero(name, params) is expected


@pytest.mark.parametrize("name", sorted(TEST_FUNCTIONS))
def test_test_function_derivatives(name):
    F = make_test_function(name)
    x = np.linspace(-2.0, 2.0, 41)
    eps = 1e-5
    for k in range(4):
        numeric = (F(x + eps, k) - F(x - eps, k)) / (2 * eps)
        np.testing.assert_allclose(F(x, k + 1), numeric, atol=1e-6)


def test_unknown_test_function():
    with pytest.raises(ConfigError):
        make_test_function("cubic")

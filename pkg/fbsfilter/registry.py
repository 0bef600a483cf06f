"""
Registros de funciones con nombre: coeficientes de la SDE, sensores y
funciones de prueba con sus derivadas analíticas hasta orden 4.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from fbsfilter.errors import ConfigError
from fbsfilter.filtering import TestFunction

ScalarFn = Callable[[np.ndarray], np.ndarray]


# =========================================================
# COEFICIENTES Y SENSORES
# =========================================================

def _zero(**_) -> ScalarFn:
    return lambda x: np.zeros_like(np.asarray(x, dtype=float))


def _constant(c: float = 1.0, **_) -> ScalarFn:
    return lambda x: np.full_like(np.asarray(x, dtype=float), c)


def _linear(slope: float = 1.0, intercept: float = 0.0, **_) -> ScalarFn:
    return lambda x: slope * np.asarray(x, dtype=float) + intercept


def _sin(amplitude: float = 1.0, frequency: float = 1.0, phase: float = 0.0, **_) -> ScalarFn:
    return lambda x: amplitude * np.sin(frequency * np.asarray(x, dtype=float) + phase)


COEFFICIENTS: dict[str, Callable[..., ScalarFn]] = {
    "zero": _zero,
    "constant": _constant,
    "linear": _linear,
    "sin": _sin,
}

SENSORS: dict[str, Callable[..., ScalarFn]] = dict(COEFFICIENTS)


def build_function(registry: dict, name: str, params: dict | None = None) -> ScalarFn:
    if name not in registry:
        raise ConfigError(f"Función desconocida: {name}", [f"name: opciones {sorted(registry)}"])
    try:
        return registry[name](**(params or {}))
    except TypeError as e:
        raise ConfigError(f"Parámetros inválidos para {name}: {e}", [f"params: {e}"]) from e


def is_zero(name: str, params: dict | None = None) -> bool:
    params = params or {}
    if name == "zero":
        return True
    if name == "constant":
        return params.get("c", 1.0) == 0
    if name == "sin":
        return params.get("amplitude", 1.0) == 0
    if name == "linear":
        return params.get("slope", 1.0) == 0 and params.get("intercept", 0.0) == 0
    return False


# =========================================================
# FUNCIONES DE PRUEBA
# =========================================================

def _tanh_derivatives():
    def t(x):
        return np.tanh(x)

    def s(x):
        return 1.0 - np.tanh(x) ** 2

    return (
        t,
        s,
        lambda x: -2.0 * t(x) * s(x),
        lambda x: s(x) * (6.0 * t(x) ** 2 - 2.0),
        lambda x: s(x) * (16.0 * t(x) - 24.0 * t(x) ** 3),
    )


def _gauss_derivatives():
    def e(x):
        return np.exp(-0.5 * x ** 2)

    return (
        e,
        lambda x: -x * e(x),
        lambda x: (x ** 2 - 1.0) * e(x),
        lambda x: -(x ** 3 - 3.0 * x) * e(x),
        lambda x: (x ** 4 - 6.0 * x ** 2 + 3.0) * e(x),
    )


def _zeros(x):
    return np.zeros_like(x)


def _ones(x):
    return np.ones_like(x)


TEST_FUNCTIONS: dict[str, tuple] = {
    "one": (_ones, _zeros, _zeros, _zeros, _zeros),
    "identity": (lambda x: x, _ones, _zeros, _zeros, _zeros),
    "square": (lambda x: x ** 2, lambda x: 2.0 * x, lambda x: 2.0 * np.ones_like(x), _zeros, _zeros),
    "sin": (np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin),
    "cos": (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin, np.cos),
    "tanh": _tanh_derivatives(),
    "gauss": _gauss_derivatives(),
}


def make_test_function(name: str) -> TestFunction:
    if name not in TEST_FUNCTIONS:
        raise ConfigError(f"Función de prueba desconocida: {name}", [f"test_functions: opciones {sorted(TEST_FUNCTIONS)}"])
    return TestFunction(name, TEST_FUNCTIONS[name])


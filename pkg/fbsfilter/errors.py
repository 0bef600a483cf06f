"""
Jerarquía de errores del paquete fbsfilter
"""


class FbsError(Exception):
    """Base de todos los errores del paquete"""


class DomainError(FbsError, ValueError):
    """Argumento fuera del dominio de la operación"""


class ShapeError(FbsError, ValueError):
    """Grillas o arreglos incompatibles"""


class ContractError(FbsError):
    """Contrato violado (p. ej. camino que no es escalera)"""


class ConfigError(FbsError):
    """Configuración inválida; `errors` trae mensajes por campo"""

    def __init__(self, message: str, errors: list[str] | None = None):
        super().__init__(message)
        self.errors = errors or []


class NumericalError(FbsError):
    """Falla numérica (exit code 3 en la CLI)"""


class FactorizationError(NumericalError):
    """Cholesky falló incluso después del reintento con jitter"""


class BlowUpError(NumericalError):
    """Valor no finito en el barrido de Euler"""

    def __init__(self, message: str, node: tuple[int, int]):
        super().__init__(message)
        self.node = node


class DegenerateEnsembleError(NumericalError):
    """Todos los pesos del ensamble son cero en punto flotante"""

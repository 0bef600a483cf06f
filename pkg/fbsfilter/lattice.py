"""
Geometría del cuadrante positivo: orden parcial, grillas, incrementos
sobre rectángulos e integrales dobles discretas.

Convenciones de la grilla:
- La celda (i, j) es [i*h1, (i+1)*h1] x [j*h2, (j+1)*h2]; su nodo es el punto medio.
- Un campo acumulado guarda en (i, j) el valor sobre el rectángulo formado por las
  celdas (k, l) con k <= i, l <= j, es decir, el nodo ajustado a la esquina superior
  de su celda. Sobre los ejes el valor es 0 y no se almacena.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from fbsfilter.errors import DomainError, ShapeError

logger = logging.getLogger(__name__)


# =========================================================
# TIPOS
# =========================================================

@dataclass(frozen=True)
class Point2:
    z1: float
    z2: float

    def __post_init__(self):
        if not (self.z1 >= 0 and self.z2 >= 0):
            raise DomainError(f"Point2 fuera del cuadrante positivo: ({self.z1}, {self.z2})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.z1, self.z2)


@dataclass(frozen=True)
class Rect2:
    lo: Point2
    hi: Point2

    def __post_init__(self):
        if not (self.lo.z1 <= self.hi.z1 and self.lo.z2 <= self.hi.z2):
            raise DomainError(f"Rect2 requiere lo ≺ hi, recibido {self.lo} y {self.hi}")


@dataclass(frozen=True)
class OrderRelations:
    prec: bool
    prec_strict: bool
    curly: bool
    meet: Point2
    join: Point2
    odot: Point2


@dataclass(frozen=True)
class Grid2D:
    """Grilla uniforme escalonada (nodos en puntos medios) sobre [0,T1]x[0,T2]"""

    T1: float
    T2: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.T1 <= 0 or self.T2 <= 0:
            raise DomainError(f"Dominio vacío: T=({self.T1}, {self.T2})")
        if self.n1 < 1 or self.n2 < 1:
            raise DomainError(f"Grilla sin celdas: n=({self.n1}, {self.n2})")

    @property
    def h1(self) -> float:
        return self.T1 / self.n1

    @property
    def h2(self) -> float:
        return self.T2 / self.n2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def cell_area(self) -> float:
        return self.h1 * self.h2

    @property
    def nodes1(self) -> np.ndarray:
        return (np.arange(self.n1) + 0.5) * self.h1

    @property
    def nodes2(self) -> np.ndarray:
        return (np.arange(self.n2) + 0.5) * self.h2

    @property
    def corners1(self) -> np.ndarray:
        return np.arange(1, self.n1 + 1) * self.h1

    @property
    def corners2(self) -> np.ndarray:
        return np.arange(1, self.n2 + 1) * self.h2

    @property
    def top_right(self) -> Point2:
        return Point2(self.T1, self.T2)

    def node(self, i: int, j: int) -> Point2:
        return Point2((i + 0.5) * self.h1, (j + 0.5) * self.h2)

    def snap_corner(self, z: Point2) -> tuple[int, int]:
        """Índices (p, q) de la esquina de la grilla más cercana a z (tolerancia h/2)"""
        p = int(np.floor(z.z1 / self.h1 + 0.5))
        q = int(np.floor(z.z2 / self.h2 + 0.5))
        if p > self.n1 or q > self.n2:
            raise DomainError(f"Punto {z} fuera del dominio [0,{self.T1}]x[0,{self.T2}]")
        return p, q

    def snap_node(self, z: Point2) -> tuple[int, int]:
        """Índices del nodo cuyo rectángulo acumulado contiene z tras el ajuste"""
        p, q = self.snap_corner(z)
        return max(p, 1) - 1, max(q, 1) - 1

    def refine(self) -> "Grid2D":
        return Grid2D(self.T1, self.T2, 2 * self.n1, 2 * self.n2)


@dataclass(frozen=True)
class SampledField2D:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != self.grid.shape:
            raise ShapeError(f"Campo de forma {arr.shape}, grilla {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("El campo contiene valores no finitos")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable, at: str = "nodes") -> "SampledField2D":
        """Evalúa fn(z1, z2) en nodos ("nodes") o en esquinas superiores ("corners")"""
        if at == "nodes":
            z1, z2 = grid.nodes1, grid.nodes2
        elif at == "corners":
            z1, z2 = grid.corners1, grid.corners2
        else:
            raise DomainError(f"Ubicación desconocida: {at}")
        Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
        return cls(grid, np.broadcast_to(fn(Z1, Z2), grid.shape))

    def same_grid(self, other: "SampledField2D") -> None:
        if self.grid != other.grid:
            raise ShapeError(f"Grillas distintas: {self.grid} vs {other.grid}")


# =========================================================
# ORDEN PARCIAL
# =========================================================

def partial_order_ops(a: Point2, b: Point2) -> OrderRelations:
    """Relaciones ≺, ≺≺, ⋏ y operaciones ∧, ∨, ⊙ del cuadrante positivo"""
    return OrderRelations(
        prec=a.z1 <= b.z1 and a.z2 <= b.z2,
        prec_strict=a.z1 < b.z1 and a.z2 < b.z2,
        curly=a.z1 <= b.z1 and a.z2 >= b.z2,
        meet=Point2(min(a.z1, b.z1), min(a.z2, b.z2)),
        join=Point2(max(a.z1, b.z1), max(a.z2, b.z2)),
        odot=Point2(a.z1, b.z2),
    )


# =========================================================
# ACUMULADOS E INCREMENTOS
# =========================================================

def cumulative_from_increments(increments: np.ndarray) -> np.ndarray:
    """Suma rectangular sobre los dos últimos ejes (admite lotes)"""
    return np.cumsum(np.cumsum(increments, axis=-2), axis=-1)


def increments_from_cumulative(cumulative: np.ndarray) -> np.ndarray:
    """Inversa exacta de cumulative_from_increments, con ceros sobre los ejes"""
    d1 = np.diff(cumulative, axis=-2, prepend=0.0)
    return np.diff(d1, axis=-1, prepend=0.0)


def low_corner_values(values: np.ndarray, fill) -> np.ndarray:
    """Valor en la esquina inferior de cada celda: values(i-1, j-1), o fill sobre los ejes"""
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape)
    fill = np.asarray(fill, dtype=float)[..., None]
    out[..., 0, :] = fill
    out[..., :, 0] = fill
    out[..., 1:, 1:] = values[..., :-1, :-1]
    return out


def corner_value(cumulative: np.ndarray, p: int, q: int) -> float:
    """Valor acumulado en la esquina (p*h1, q*h2); cero sobre los ejes"""
    if p == 0 or q == 0:
        return 0.0
    return float(cumulative[p - 1, q - 1])


def rect_increment(f: SampledField2D, r: Rect2) -> float:
    """
    Incremento X_{z'} - X_{z⊙z'} - X_{z'⊙z} + X_z de un campo acumulado sobre (z, z'].
    Las esquinas se ajustan a la esquina de grilla más cercana.
    """
    grid = f.grid
    for z in (r.lo, r.hi):
        if z.z1 > grid.T1 + grid.h1 / 2 or z.z2 > grid.T2 + grid.h2 / 2:
            raise DomainError(f"Rectángulo fuera del dominio de la grilla: {r}")

    p0, q0 = grid.snap_corner(r.lo)
    p1, q1 = grid.snap_corner(r.hi)
    v = f.values
    return (
        corner_value(v, p1, q1)
        - corner_value(v, p0, q1)
        - corner_value(v, p1, q0)
        + corner_value(v, p0, q0)
    )


# =========================================================
# INTEGRALES DOBLES DISCRETAS
# =========================================================

Psi = Union[float, np.ndarray, Callable[..., np.ndarray]]


def cone_pairs(n1: int, n2: int, p: int | None = None, q: int | None = None):
    """Índices (i, j, k, l) con i < k, l < j dentro de las primeras p x q celdas"""
    p = n1 if p is None else p
    q = n2 if q is None else q
    i, k = np.triu_indices(p, k=1)
    l, j = np.triu_indices(q, k=1)
    I = np.repeat(i, len(l))
    K = np.repeat(k, len(l))
    L = np.tile(l, len(i))
    J = np.tile(j, len(i))
    return I, J, K, L


def double_integral_discrete(psi: Psi, A: SampledField2D, B: SampledField2D, z: Point2 | None = None) -> float:
    """
    Σ_{i<k, l<j} ψ(nodo_ij, nodo_kl) A(celda_ij) B(celda_kl) sobre las celdas dentro de R_z.
    Solo contribuyen pares en el cono ⋏ abierto.
    """
    A.same_grid(B)
    grid = A.grid
    p, q = grid.snap_corner(z) if z is not None else grid.shape
    I, J, K, L = cone_pairs(grid.n1, grid.n2, p, q)
    if len(I) == 0:
        return 0.0

    if callable(psi):
        n1, n2 = grid.nodes1, grid.nodes2
        weights = np.broadcast_to(psi(n1[I], n2[J], n1[K], n2[L]), I.shape)
    elif np.ndim(psi) == 0:
        weights = np.full(I.shape, float(psi))
    else:
        psi = np.asarray(psi, dtype=float)
        if psi.shape != grid.shape + grid.shape:
            raise ShapeError(f"ψ de forma {psi.shape}, se esperaba {grid.shape + grid.shape}")
        weights = psi[I, J, K, L]

    return float(np.sum(weights * A.values[I, J] * B.values[K, L]))


def cone_sum_separable(
        G: np.ndarray,
        a: np.ndarray,
        b: np.ndarray,
        corner: tuple[int, int] | None = None,
        boundary: bool = False,
) -> np.ndarray:
    """
    Σ_{i<k, l<j} G[k, j] a[i, j] b[k, l] para integrandos producto tensorial.

    G se evalúa en el join (k, j) de cada par. Los dos últimos ejes son la grilla; los
    anteriores (p. ej. partículas) se conservan. Con boundary=True se usa la cuadratura
    de Lebesgue del cono cerrado: cada par de celdas pesa la fracción de su producto que
    cae en el cono (1 en el interior, 1/2 alineados en un eje, 1/4 la misma celda).
    """
    G, a, b = np.broadcast_arrays(G, a, b)
    if corner is not None:
        p, q = corner
        G, a, b = G[..., :p, :q], a[..., :p, :q], b[..., :p, :q]

    self_weight = 0.5 if boundary else 1.0
    a_cum = np.cumsum(a, axis=-2) - self_weight * a
    b_cum = np.cumsum(b, axis=-1) - self_weight * b
    return np.sum(G * a_cum * b_cum, axis=(-2, -1))

"""
Espacios ℓ_p de dimensión finita.

Normas, exponentes conjugados, emparejamiento de dualidad y el conjunto exacto
de funcionales de soporte J(x) = {x* : ‖x*‖ = 1, x*(x) = ‖x‖}.

El dual de ℓ_p^n se representa concretamente como ℓ_q^n en coordenadas.
Los escalares son float64 o, en modo exacto, fractions.Fraction dentro de
arrays numpy de dtype object.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import islice, product
from typing import Any, Iterable, List, Optional, Tuple, Union

import numpy as np

from .logger_config import obtener_logger

logger = obtener_logger(__name__)

INF: float = math.inf

Scalar = Union[float, Fraction]


class SpaceError(Exception):
    """Excepción base del módulo de espacios."""
    pass


class DimensionMismatchError(SpaceError):
    """Violación de contrato: dimensiones incompatibles."""
    pass


class InvalidInputError(SpaceError):
    """Entrada inválida: coordenadas no finitas, exponente fuera de rango, vector nulo."""
    pass


def parse_scalar(valor: Any, exacto: bool = False) -> Scalar:
    """Convierte un número o cadena ("1/3", "0.25") en Fraction (exacto) o float."""
    if isinstance(valor, bool):
        raise InvalidInputError(f"Escalar inválido: {valor!r}")

    if isinstance(valor, Fraction):
        return valor if exacto else float(valor)

    if isinstance(valor, (int, np.integer)):
        return Fraction(int(valor)) if exacto else float(valor)

    if isinstance(valor, (float, np.floating)):
        if not math.isfinite(valor):
            raise InvalidInputError(f"Coordenada no finita: {valor!r}")
        return Fraction(repr(float(valor))) if exacto else float(valor)

    if isinstance(valor, str):
        try:
            racional = Fraction(valor.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidInputError(f"Escalar inválido {valor!r}: {e}")
        return racional if exacto else float(racional)

    raise InvalidInputError(f"Tipo de escalar no soportado: {type(valor).__name__}")


def parse_exponent(p: Any) -> float:
    """Interpreta el exponente p; acepta números, "inf" y "∞"."""
    if isinstance(p, str):
        texto = p.strip().lower()
        if texto in ("inf", "infinity", "∞"):
            return INF
        try:
            p = float(Fraction(texto))
        except (ValueError, ZeroDivisionError):
            raise InvalidInputError(f"Exponente inválido: {p!r}")

    if isinstance(p, bool) or not isinstance(p, (int, float, Fraction, np.integer, np.floating)):
        raise InvalidInputError(f"Exponente inválido: {p!r}")

    p = float(p)
    if math.isnan(p) or p < 1:
        raise InvalidInputError(f"El exponente debe cumplir p >= 1 o p = inf; obtenido {p}")
    return p


def conjugate_exponent(p: float) -> float:
    """Exponente conjugado q con 1/p + 1/q = 1 (1 <-> inf)."""
    p = parse_exponent(p)
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def _es_racional(x: Any) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


def _normalizar_coords(coords: Any) -> np.ndarray:
    """Copia inmutable de las coordenadas, float64 o racional exacto."""
    arr = np.array(coords, dtype=object if _contiene_racionales(coords) else None, copy=True)

    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"Se esperaba una lista no vacía de escalares, forma {arr.shape}")

    if arr.dtype == object:
        if all(_es_racional(x) for x in arr):
            arr = np.array([Fraction(x) for x in arr], dtype=object)
        else:
            try:
                arr = arr.astype(float)
            except (TypeError, ValueError) as e:
                raise InvalidInputError(f"Coordenadas no numéricas: {e}")

    if arr.dtype != object:
        arr = arr.astype(float)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("Las coordenadas deben ser finitas (sin NaN/inf)")

    arr.flags.writeable = False
    return arr


def _contiene_racionales(coords: Any) -> bool:
    if isinstance(coords, np.ndarray):
        return coords.dtype == object
    try:
        return any(isinstance(x, Fraction) for x in coords)
    except TypeError:
        return False


def _escalar(x: Any) -> Scalar:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    return float(x)


def signo(x: Any) -> int:
    return int(x > 0) - int(x < 0)


def compatibilizar(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Aritmética exacta sólo si ambos operandos son exactos; si no, float64."""
    if a.dtype == object and b.dtype == object:
        return a, b
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def verificar_dimension(esperada: int, obtenida: int, contexto: str) -> None:
    if esperada != obtenida:
        raise DimensionMismatchError(
            f"{contexto}: dimensión {obtenida} incompatible con {esperada}"
        )


@dataclass(frozen=True, eq=False)
class Vector:
    """Vector de coordenadas reales finitas."""

    coords: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", _normalizar_coords(self.coords))

    @property
    def dim(self) -> int:
        return int(self.coords.shape[0])

    @property
    def exact(self) -> bool:
        return self.coords.dtype == object

    @classmethod
    def from_values(cls, valores: Iterable[Any], exact: bool = False) -> "Vector":
        return cls(np.array([parse_scalar(v, exact) for v in valores], dtype=object if exact else float))

    @classmethod
    def basis(cls, dim: int, indice: int, exact: bool = False) -> "Vector":
        valores = [1 if i == indice else 0 for i in range(dim)]
        return cls.from_values(valores, exact=exact)

    def to_float(self) -> "Vector":
        return Vector(self.coords.astype(float))

    def tolist(self) -> List[Scalar]:
        return [_escalar(x) for x in self.coords]

    def allclose(self, otro: "Vector", atol: float = 1e-12) -> bool:
        if otro.dim != self.dim:
            return False
        return bool(np.allclose(self.coords.astype(float), otro.coords.astype(float), rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class Functional(Vector):
    """Funcional lineal sobre ℓ_p^n, medido en la norma dual ℓ_q (dual_p = q)."""

    dual_p: float = 2.0

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "dual_p", parse_exponent(self.dual_p))


@dataclass(frozen=True)
class NormSpec:
    """Espacio ℓ_p de dimensión finita."""

    dim: int
    p: float = 2.0

    def __post_init__(self) -> None:
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidInputError(f"dim debe ser un entero positivo; obtenido {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", parse_exponent(self.p))

    @property
    def is_smooth(self) -> bool:
        return 1 < self.p < INF

    @property
    def label(self) -> str:
        exponente = "inf" if self.p == INF else f"{self.p:g}"
        return f"l{exponente}^{self.dim}"

    def dual(self) -> "NormSpec":
        return NormSpec(self.dim, conjugate_exponent(self.p))


def norma_coords(coords: np.ndarray, p: float) -> Scalar:
    absolutos = np.abs(coords)

    if p == 1:
        return _escalar(absolutos.sum())
    if p == INF:
        return _escalar(absolutos.max())

    valores = absolutos.astype(float)
    escala = float(valores.max())
    if escala == 0.0:
        return 0.0
    if p == 2:
        return float(escala * np.sqrt(np.sum((valores / escala) ** 2)))
    return float(escala * np.sum((valores / escala) ** p) ** (1.0 / p))


def norm(v: Vector, s: NormSpec) -> Scalar:
    """Norma ℓ_p de v; exacta para p en {1, inf} con coordenadas racionales."""
    verificar_dimension(s.dim, v.dim, "norm")
    return norma_coords(v.coords, s.p)


def dual_norm(f: Functional) -> Scalar:
    """Norma del funcional en su exponente dual."""
    return norma_coords(f.coords, f.dual_p)


def pair(f: Functional, v: Vector) -> Scalar:
    """Emparejamiento de dualidad f(v) = Σ f_i v_i."""
    verificar_dimension(f.dim, v.dim, "pair")
    a, b = compatibilizar(f.coords, v.coords)
    return _escalar((a * b).sum())


def support_direction(coords: np.ndarray, p: float) -> np.ndarray:
    """
    Representante canónico de J(v) en coordenadas float.

    Vector unitario de ℓ_q que alcanza ‖v‖_p en v. Aplicado con p = q sobre un
    gradiente g, devuelve el vector unitario de ℓ_p que maximiza g·x. Devuelve
    ceros si v = 0.
    """
    valores = np.asarray(coords, dtype=float)
    absolutos = np.abs(valores)
    maximo = float(absolutos.max()) if valores.size else 0.0
    if maximo == 0.0:
        return np.zeros_like(valores)

    if p == 1:
        return np.sign(valores)
    if p == INF:
        soporte = absolutos == maximo
        return np.where(soporte, np.sign(valores), 0.0) / float(soporte.sum())

    nv = float(norma_coords(valores, p))
    return np.sign(valores) * (absolutos / nv) ** (p - 1.0)


class FaceKind(str, Enum):
    SINGLETON = "singleton"
    BOX = "box"
    SIMPLEX = "simplex"


@dataclass(frozen=True, eq=False)
class SupportFace:
    """
    Conjunto exacto J(anchor).

    singleton: sólo base. box (p=1): la coordenada i vale sign(anchor_i) si
    anchor_i != 0 y es libre en [-1, 1] si anchor_i = 0. simplex (p=inf):
    combinaciones convexas de sign(anchor_i) e_i sobre el conjunto argmax.
    """

    kind: FaceKind
    base: Functional
    anchor: Vector
    space: NormSpec
    free_coordinates: Tuple[int, ...] = ()
    support: Tuple[int, ...] = ()

    @property
    def dimension(self) -> int:
        if self.kind == FaceKind.BOX:
            return len(self.free_coordinates)
        if self.kind == FaceKind.SIMPLEX:
            return len(self.support) - 1
        return 0

    @property
    def is_polyhedral(self) -> bool:
        return self.kind != FaceKind.SINGLETON

    @property
    def vertex_count(self) -> int:
        if self.kind == FaceKind.BOX:
            return 2 ** len(self.free_coordinates)
        if self.kind == FaceKind.SIMPLEX:
            return len(self.support)
        return 1

    def free_intervals(self) -> dict:
        return {i: (-1, 1) for i in self.free_coordinates}

    def vertices(self, limite: Optional[int] = None) -> List[Functional]:
        """Vértices de la cara (la propia base para singleton)."""
        if self.kind == FaceKind.SINGLETON:
            return [self.base]

        uno = Fraction(1) if self.base.exact else 1.0
        q = self.base.dual_p

        if self.kind == FaceKind.SIMPLEX:
            vertices = []
            for i in self.support:
                coords = np.array([0 * uno] * self.anchor.dim, dtype=self.base.coords.dtype)
                coords[i] = signo(self.anchor.coords[i]) * uno
                vertices.append(Functional(coords, q))
            return vertices[:limite] if limite is not None else vertices

        def _generar():
            for signos in product((1, -1), repeat=len(self.free_coordinates)):
                coords = np.array(self.base.coords, copy=True)
                for i, s in zip(self.free_coordinates, signos):
                    coords[i] = s * uno
                yield Functional(coords, q)

        if limite is not None and self.vertex_count > limite:
            logger.warning(f"Cara con {self.vertex_count} vértices; se enumeran sólo {limite}")
        return list(islice(_generar(), limite))


def support_face(v: Vector, s: NormSpec) -> SupportFace:
    """Cara exacta J(v) de funcionales de norma 1 que alcanzan ‖v‖ en v."""
    verificar_dimension(s.dim, v.dim, "support_face")
    nv = norm(v, s)
    if nv == 0:
        raise InvalidInputError("support_face requiere v != 0 (J(0) es toda la esfera dual)")

    q = conjugate_exponent(s.p)
    coords = v.coords
    exacto = v.exact

    if s.p == 1:
        libres = tuple(i for i in range(v.dim) if coords[i] == 0)
        base = [signo(x) for x in coords]
        return SupportFace(
            kind=FaceKind.BOX,
            base=Functional(Vector.from_values(base, exact=exacto).coords, q),
            anchor=v,
            space=s,
            free_coordinates=libres,
        )

    if s.p == INF:
        absolutos = np.abs(coords)
        maximo = absolutos.max()
        soporte = tuple(i for i in range(v.dim) if absolutos[i] == maximo)
        k = len(soporte)
        base = [
            (Fraction(signo(coords[i]), k) if exacto else signo(coords[i]) / k) if i in soporte else 0
            for i in range(v.dim)
        ]
        return SupportFace(
            kind=FaceKind.SIMPLEX,
            base=Functional(Vector.from_values(base, exact=exacto).coords, q),
            anchor=v,
            space=s,
            support=soporte,
        )

    return SupportFace(
        kind=FaceKind.SINGLETON,
        base=Functional(support_direction(coords, s.p), q),
        anchor=v,
        space=s,
    )


def face_contains(face: SupportFace, f: Functional, tol: float = 1e-12) -> bool:
    """f pertenece a J(anchor) dentro de tol en ‖f‖_q = 1 y f(anchor) = ‖anchor‖."""
    verificar_dimension(face.anchor.dim, f.dim, "face_contains")
    # Con coordenadas racionales ambas comparaciones son exactas
    norma_dual = norma_coords(f.coords, face.base.dual_p)
    norma_anchor = norm(face.anchor, face.space)

    if abs(norma_dual - 1) > tol:
        return False
    return abs(pair(f, face.anchor) - norma_anchor) <= tol * max(1, norma_anchor)

"""
Operadores lineales densos sobre espacios ℓ_p.

Aplicación, adjunto, cotas de norma de operador, certificación de
contracción y subespacios de puntos fijos.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .config import SearchConfig, ToleranceConfig
from .logger_config import obtener_logger
from .space import (
    INF,
    DimensionMismatchError,
    Functional,
    NormSpec,
    Vector,
    compatibilizar,
    conjugate_exponent,
    norma_coords,
    parse_scalar,
    support_direction,
    verificar_dimension,
)

logger = obtener_logger(__name__)

_EPS = float(np.finfo(float).eps)


class OperatorError(Exception):
    """Excepción base del módulo de operadores."""
    pass


class ContractViolationError(OperatorError):
    """Se violó una precondición de contrato (p. ej. el operador no es contracción)."""
    pass


class EmptyOperatorListError(OperatorError):
    """Se requiere al menos un operador."""
    pass


def _normalizar_matriz(matriz: Any) -> np.ndarray:
    """Copia inmutable de una matriz cuadrada, float64 o racional exacta."""
    arr = np.array(matriz, dtype=object, copy=True)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.size == 0:
        raise DimensionMismatchError(f"Se esperaba una matriz cuadrada no vacía, forma {arr.shape}")

    elementos = arr.ravel()
    if all(isinstance(x, (Fraction, int)) and not isinstance(x, bool) for x in elementos):
        if any(isinstance(x, Fraction) for x in elementos) or not np.asarray(matriz).dtype.kind in "iu":
            arr = np.array([[Fraction(x) for x in fila] for fila in arr], dtype=object)
        else:
            arr = arr.astype(float)
    else:
        try:
            arr = arr.astype(float)
        except (TypeError, ValueError) as e:
            raise OperatorError(f"Entradas de matriz no numéricas: {e}")
        if not np.all(np.isfinite(arr)):
            raise OperatorError("Las entradas de la matriz deben ser finitas")

    arr.flags.writeable = False
    return arr


def ascenso_potencia(matriz: np.ndarray, p: float, x0: np.ndarray, max_iters: int) -> Tuple[np.ndarray, float]:
    """
    Ascenso de potencia no lineal x <- J_q(Mᵀ J_p(Mx)) sobre la esfera unidad de ℓ_p.

    Con g = Mᵀ y*, y* ∈ J(Mx): g·x = ‖Mx‖ y el nuevo x maximiza g·x, así que
    ‖Mx‖_p no decrece en ningún paso.
    """
    q = conjugate_exponent(p)
    nx = float(norma_coords(x0, p))
    if nx == 0.0:
        x0 = np.eye(matriz.shape[0])[0]
        nx = 1.0
    x = np.asarray(x0, dtype=float) / nx
    valor = float(norma_coords(matriz @ x, p))

    for _ in range(max_iters):
        y = matriz @ x
        if not np.any(y):
            break
        g = matriz.T @ support_direction(y, p)
        if not np.any(g):
            break
        candidato = support_direction(g, q)
        nuevo = float(norma_coords(matriz @ candidato, p))
        if nuevo <= valor:
            break
        x, valor = candidato, nuevo

    return x, valor


def _norma_exacta_1(matriz: np.ndarray) -> Tuple[float, int]:
    columnas = np.abs(matriz).sum(axis=0)
    j = int(np.argmax(columnas))
    return float(columnas[j]), j


def _norma_exacta_inf(matriz: np.ndarray) -> Tuple[float, int]:
    filas = np.abs(matriz).sum(axis=1)
    i = int(np.argmax(filas))
    return float(filas[i]), i


def _acotar_norma(matriz: np.ndarray, p: float) -> Tuple[float, float, np.ndarray]:
    """Cota [inferior, superior] de ‖M‖_{p->p} y un vector unitario que alcanza la inferior."""
    n = matriz.shape[0]
    if not np.any(matriz):
        return 0.0, 0.0, np.eye(n)[0]

    if p == 1:
        valor, j = _norma_exacta_1(matriz)
        return valor, valor, np.eye(n)[j]

    if p == INF:
        valor, i = _norma_exacta_inf(matriz)
        return valor, valor, np.where(matriz[i] >= 0, 1.0, -1.0)

    _, singulares, vt = np.linalg.svd(matriz)
    sigma = float(singulares[0])

    if p == 2:
        # Cota inferior certificada por el cociente de Rayleigh del vector singular pulido
        testigo, inferior = ascenso_potencia(matriz, 2.0, vt[0], SearchConfig.POWER_MAX_ITERS)
        superior = max(sigma, inferior) * (1.0 + 4.0 * _EPS)
        return inferior, superior, testigo

    n1, _ = _norma_exacta_1(matriz)
    ninf, _ = _norma_exacta_inf(matriz)
    # Riesz-Thorin entre los extremos exactos {1, 2, inf}
    candidatos = [n1 ** (1.0 / p) * ninf ** (1.0 - 1.0 / p)]
    if p < 2:
        theta = 2.0 * (1.0 - 1.0 / p)
        candidatos.append(n1 ** (1.0 - theta) * sigma ** theta)
    else:
        theta = 2.0 / p
        candidatos.append(sigma ** theta * ninf ** (1.0 - theta))
    superior = min(candidatos) * (1.0 + 4.0 * _EPS)

    rng = np.random.default_rng(SearchConfig.NORM_SEED)
    arranques = list(np.eye(n)) + [rng.standard_normal(n) for _ in range(SearchConfig.NORM_STARTS)]
    mejor_x, inferior = arranques[0], -1.0
    for x0 in arranques:
        x, valor = ascenso_potencia(matriz, p, x0, SearchConfig.POWER_MAX_ITERS)
        if valor > inferior:
            mejor_x, inferior = x, valor

    return inferior, max(superior, inferior), mejor_x


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Matriz real densa actuando sobre un NormSpec, con cota de norma calculada al construir."""

    matrix: np.ndarray
    space: NormSpec
    norm_bracket: Optional[Tuple[float, float]] = None
    name: str = ""
    norm_witness: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        matriz = _normalizar_matriz(self.matrix)
        if matriz.shape[0] != self.space.dim:
            raise DimensionMismatchError(
                f"Matriz {matriz.shape} incompatible con {self.space.label}"
            )
        object.__setattr__(self, "matrix", matriz)

        if self.norm_bracket is None:
            inferior, superior, testigo = _acotar_norma(matriz.astype(float), self.space.p)
            testigo = np.array(testigo, dtype=float)
            testigo.flags.writeable = False
            object.__setattr__(self, "norm_bracket", (inferior, superior))
            object.__setattr__(self, "norm_witness", testigo)
        else:
            inferior, superior = (float(x) for x in self.norm_bracket)
            if inferior < 0 or superior < inferior:
                raise OperatorError(f"Cota de norma inválida: [{inferior}, {superior}]")
            object.__setattr__(self, "norm_bracket", (inferior, superior))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def exact(self) -> bool:
        return self.matrix.dtype == object

    @property
    def is_compact(self) -> bool:
        # Todo operador en dimensión finita es compacto
        return True

    @classmethod
    def from_rows(cls, filas: Sequence[Sequence[Any]], space: NormSpec, exact: bool = False, name: str = "") -> "LinearOperator":
        matriz = np.array(
            [[parse_scalar(x, exact) for x in fila] for fila in filas],
            dtype=object if exact else float,
        )
        return cls(matriz, space, name=name)

    def to_float(self) -> "LinearOperator":
        if not self.exact:
            return self
        return LinearOperator(self.matrix.astype(float), self.space, self.norm_bracket, self.name, self.norm_witness)

    def matrix_float(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subespacio descrito por una base ortonormal euclídea (filas de basis)."""

    basis: np.ndarray
    ambient_dim: int

    def __post_init__(self) -> None:
        arr = np.array(self.basis, dtype=float, copy=True).reshape(-1, self.ambient_dim)
        arr.flags.writeable = False
        object.__setattr__(self, "basis", arr)

    @property
    def dim_sub(self) -> int:
        return int(self.basis.shape[0])

    def vectors(self) -> List[Vector]:
        return [Vector(fila) for fila in self.basis]

    def project(self, v: Vector) -> Vector:
        """Proyección ortogonal (mínimos cuadrados sobre la base)."""
        verificar_dimension(self.ambient_dim, v.dim, "Subspace.project")
        if self.dim_sub == 0:
            return Vector(np.zeros(self.ambient_dim))
        coeficientes, *_ = np.linalg.lstsq(self.basis.T, v.coords.astype(float), rcond=None)
        return Vector(self.basis.T @ coeficientes)

    def distance(self, v: Vector) -> float:
        """Distancia euclídea de v al subespacio."""
        return float(np.linalg.norm(v.coords.astype(float) - self.project(v).coords))

    def contains(self, v: Vector, tol: float = 1e-10) -> bool:
        return self.distance(v) <= tol * max(1.0, float(np.linalg.norm(v.coords.astype(float))))


def apply(T: LinearOperator, v: Vector) -> Vector:
    """Producto matriz-vector; conserva el tipo (Vector o Functional)."""
    verificar_dimension(T.dim, v.dim, "apply")
    matriz, coords = compatibilizar(T.matrix, v.coords)
    resultado = matriz @ coords
    if isinstance(v, Functional):
        return Functional(resultado, v.dual_p)
    return Vector(resultado)


def adjoint(T: LinearOperator) -> LinearOperator:
    """Traspuesta actuando sobre el espacio dual (exponente conjugado)."""
    nombre = T.name[:-1] if T.name.endswith("*") else (f"{T.name}*" if T.name else "")
    return LinearOperator(T.matrix.T, T.space.dual(), name=nombre)


def identity(space: NormSpec, exact: bool = False) -> LinearOperator:
    filas = [[1 if i == j else 0 for j in range(space.dim)] for i in range(space.dim)]
    return LinearOperator.from_rows(filas, space, exact=exact, name="I")


def _mismo_espacio(ops: Sequence[LinearOperator]) -> NormSpec:
    if not ops:
        raise EmptyOperatorListError("La lista de operadores está vacía")
    espacio = ops[0].space
    for T in ops[1:]:
        if T.space != espacio:
            raise DimensionMismatchError(
                f"Operadores sobre espacios distintos: {espacio.label} y {T.space.label}"
            )
    return espacio


def compose(A: LinearOperator, B: LinearOperator) -> LinearOperator:
    """Producto A·B (primero B) con cota de norma recalculada."""
    espacio = _mismo_espacio([A, B])
    ma, mb = compatibilizar(A.matrix, B.matrix)
    return LinearOperator(ma @ mb, espacio, name=f"{A.name}{B.name}")


def evaluate_word(ops: Sequence[LinearOperator], palabra: Sequence[int]) -> LinearOperator:
    """
    Evalúa W = T_{w_k} ⋯ T_{w_1} para una palabra de índices 1..N (se aplica primero w_1).

    La cota [0, Π superiores] es válida para cualquier producto y evita
    recalcular la norma en búsquedas sobre muchas palabras.
    """
    espacio = _mismo_espacio(ops)
    if not palabra:
        return identity(espacio)

    exacto = all(T.exact for T in ops)
    producto = np.eye(espacio.dim, dtype=float) if not exacto else identity(espacio, exact=True).matrix
    superior = 1.0
    for indice in palabra:
        T = ops[indice - 1]
        matriz = T.matrix if exacto else T.matrix_float()
        producto = matriz @ producto
        superior *= T.norm_bracket[1]

    nombre = "·".join(ops[i - 1].name or f"T{i}" for i in reversed(palabra))
    return LinearOperator(producto, espacio, norm_bracket=(0.0, superior), name=nombre)


def operator_norm(T: LinearOperator) -> Tuple[float, float]:
    """Cota [inferior, superior] de la norma inducida; colapsa para p en {1, 2, inf}."""
    return T.norm_bracket


class ContractionStatus(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ContractionVerdict:
    status: ContractionStatus
    bracket: Tuple[float, float]
    witness: Optional[Vector] = None


def is_contraction(T: LinearOperator, tol: float = ToleranceConfig.CONTRACTION_TOL) -> ContractionVerdict:
    """yes si la cota superior <= 1 + tol; no con testigo unitario si la inferior la supera."""
    inferior, superior = T.norm_bracket

    if superior <= 1.0 + tol:
        return ContractionVerdict(ContractionStatus.YES, T.norm_bracket)

    if inferior > 1.0 + tol and T.norm_witness is not None:
        testigo = T.norm_witness / float(norma_coords(T.norm_witness, T.space.p))
        imagen = T.matrix_float() @ testigo
        if float(norma_coords(imagen, T.space.p)) > 1.0 + tol:
            return ContractionVerdict(ContractionStatus.NO, T.norm_bracket, Vector(testigo))

    logger.debug(f"Cota {T.norm_bracket} de {T.name or 'operador'} no decide la contracción")
    return ContractionVerdict(ContractionStatus.UNKNOWN, T.norm_bracket)


def require_contractions(ops: Sequence[LinearOperator], tol: float = ToleranceConfig.CONTRACTION_TOL) -> NormSpec:
    """Verifica que todos los operadores sean contracciones certificadas sobre un mismo espacio."""
    espacio = _mismo_espacio(ops)
    for indice, T in enumerate(ops, 1):
        veredicto = is_contraction(T, tol)
        if veredicto.status != ContractionStatus.YES:
            raise ContractViolationError(
                f"{T.name or f'T{indice}'} no es una contracción certificada "
                f"({veredicto.status.value}, cota {veredicto.bracket})"
            )
    return espacio


def _limpiar_base(base: np.ndarray) -> np.ndarray:
    """Anula residuos de redondeo (|b| < 1e-15) y renormaliza cada fila."""
    base = np.where(np.abs(base) < 1e-15, 0.0, base)
    normas = np.linalg.norm(base, axis=1, keepdims=True)
    return base / np.where(normas == 0.0, 1.0, normas)


def _nucleo(matriz: np.ndarray, n: int, tol: float) -> Subspace:
    if not np.any(matriz):
        return Subspace(np.eye(n), n)
    # rcond relativo al mayor valor singular: tolerancia tol·‖A‖
    base = null_space(matriz, rcond=tol).T
    return Subspace(_limpiar_base(base), n)


def fixed_space(T: LinearOperator, tol: float = ToleranceConfig.KERNEL_TOL) -> Subspace:
    """Base de ker(T - I)."""
    return _nucleo(T.matrix_float() - np.eye(T.dim), T.dim, tol)


def common_fixed_space(ops: Sequence[LinearOperator], tol: float = ToleranceConfig.KERNEL_TOL) -> Subspace:
    """Base de ∩_j ker(T_j - I) por núcleo de la matriz apilada."""
    espacio = _mismo_espacio(ops)
    apilada = np.vstack([T.matrix_float() - np.eye(espacio.dim) for T in ops])
    subespacio = _nucleo(apilada, espacio.dim, tol)
    logger.debug(f"Conjunto fijo común de {len(ops)} operadores: dimensión {subespacio.dim_sub}")
    return subespacio

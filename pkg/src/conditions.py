"""
Condiciones (W) y (W′) para operadores y semigrupos, y la maquinaria de
funcionales de soporte del adjunto.

Equivalencia en dimensión finita, (W) ⟺ (W′):

(W) ⟹ (W′): si ‖x‖ = ‖Tx‖ con Tx ≠ x, la sucesión constante x_n = x tiene
brecha de norma nula y desplazamiento constante x - Tx ≠ 0, que no tiende
a 0 débilmente.

(W′) ⟹ (W): sea (x_n) acotada con ‖x_n‖ - ‖Tx_n‖ → 0 y supongamos que
x_n - Tx_n no tiende a 0. En dimensión finita convergencia débil y fuerte
coinciden, así que existe ε > 0 y una subsucesión con ‖x_n - Tx_n‖ ≥ ε.
Por compacidad de las bolas cerradas pasamos a otra subsucesión x_n → x.
La continuidad de la norma y de T da ‖x‖ = ‖Tx‖ y ‖x - Tx‖ ≥ ε, lo que
contradice (W′). Por eso check_w delega en check_w_prime.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import islice, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .config import BatchConfig, SearchConfig, ToleranceConfig
from .logger_config import obtener_logger
from .operators import (
    ContractionStatus,
    ContractViolationError,
    EmptyOperatorListError,
    LinearOperator,
    adjoint,
    apply,
    ascenso_potencia,
    evaluate_word,
    is_contraction,
    require_contractions,
)
from .space import (
    INF,
    Functional,
    FaceKind,
    Vector,
    compatibilizar,
    face_contains,
    norm,
    norma_coords,
    pair,
    signo,
    support_face,
    verificar_dimension,
)

logger = obtener_logger(__name__)


class PreconditionError(Exception):
    """El vector de prueba no cumple la precondición (no nulo y punto fijo)."""
    pass


class WStatus(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


class Method(str, Enum):
    ALGEBRAIC_P2 = "algebraic_p2"
    SIGN_ENUMERATION = "sign_enumeration"
    NUMERIC_SEARCH = "numeric_search"


@dataclass(frozen=True)
class WVerdict:
    """Resultado de un chequeo de (W′) o (W), con procedencia del método."""

    status: WStatus
    method: Method
    witness: Optional[Vector] = None
    gap: float = 0.0
    condition: str = "W'"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "condition": self.condition,
            "status": self.status.value,
            "method": self.method.value,
            "witness": None if self.witness is None else [float(x) for x in self.witness.tolist()],
            "gap": float(self.gap),
        }


def _sin_restriccion(metodo: Method) -> WVerdict:
    return WVerdict(WStatus.HOLDS, metodo)


def _diferencia(matriz: np.ndarray, x: np.ndarray) -> np.ndarray:
    return matriz @ x - x


def _ruta_p2(matriz: np.ndarray, tol: float) -> WVerdict:
    """Autoespacio E de MᵀM para el autovalor 1; (W′) sii E ⊆ ker(M - I)."""
    n = matriz.shape[0]
    autovalores, autovectores = np.linalg.eigh(matriz.T @ matriz)
    umbral = 1.0 - min(tol, ToleranceConfig.W_PRIME_TOL)
    E = autovectores[:, autovalores >= umbral]
    if E.shape[1] == 0:
        return _sin_restriccion(Method.ALGEBRAIC_P2)

    desplazamiento = (matriz - np.eye(n)) @ E
    _, singulares, vt = np.linalg.svd(desplazamiento)
    # E tiene columnas ortonormales: singulares[0] es el máximo de ‖x - Mx‖ sobre E
    if singulares[0] <= tol:
        return _sin_restriccion(Method.ALGEBRAIC_P2)

    testigo = E @ vt[0]
    testigo = testigo / np.linalg.norm(testigo)
    brecha = float(np.linalg.norm(_diferencia(matriz, testigo)))
    return WVerdict(WStatus.FAILS, Method.ALGEBRAIC_P2, Vector(testigo), brecha)


def _ruta_p1(matriz: np.ndarray, tol: float) -> WVerdict:
    """
    En ℓ₁, ‖Mx‖ = ‖x‖ sólo si x vive en columnas de norma 1 sin cancelación;
    (W′) sii cada columna de norma 1 es el vector canónico de su índice.
    """
    n = matriz.shape[0]
    exacto = matriz.dtype == object
    mejor: Optional[WVerdict] = None

    for j in range(n):
        columna = matriz[:, j]
        if norma_coords(columna, 1) < 1 - tol:
            continue
        e_j = Vector.basis(n, j, exact=exacto)
        brecha = norma_coords(_diferencia(matriz, e_j.coords), 1)
        if brecha > tol and (mejor is None or brecha > mejor.gap):
            mejor = WVerdict(WStatus.FAILS, Method.SIGN_ENUMERATION, e_j, brecha)

    return mejor or _sin_restriccion(Method.SIGN_ENUMERATION)


def _ruta_pinf(matriz: np.ndarray, tol: float) -> WVerdict:
    """
    En ℓ_∞ la igualdad de normas ocurre en caras del cubo {x_j = sign(r_ij) en
    el soporte de una fila r_i de norma 1, libre fuera}. (W′) sii M - I se
    anula en el centro a de cada cara y en sus direcciones libres e_k.
    """
    n = matriz.shape[0]
    exacto = matriz.dtype == object
    uno = Vector.basis(n, 0, exact=exacto).coords[0]
    mejor: Optional[WVerdict] = None

    for i in range(n):
        fila = matriz[i]
        if norma_coords(fila, 1) < 1 - tol:
            continue
        centro = np.array([uno * signo(x) for x in fila], dtype=matriz.dtype)
        candidatos = [centro]
        for k in np.flatnonzero(centro == 0):
            candidato = np.array(centro, copy=True)
            candidato[k] = uno
            candidatos.append(candidato)

        for candidato in candidatos:
            brecha = norma_coords(_diferencia(matriz, candidato), INF)
            if brecha > tol and (mejor is None or brecha > mejor.gap):
                mejor = WVerdict(WStatus.FAILS, Method.SIGN_ENUMERATION, Vector(candidato), brecha)

    return mejor or _sin_restriccion(Method.SIGN_ENUMERATION)


def _busqueda_numerica(matriz: np.ndarray, p: float, restarts: int, semilla: int) -> WVerdict:
    """
    Maximiza ‖x - Mx‖ sobre ‖x‖ = 1, ‖Mx‖ ≥ 1 - δ con δ decreciente.

    Sólo falsifica: un candidato se acepta como testigo tras pulir ‖Mx‖ hasta
    WITNESS_NORM_TOL de 1 y con desplazamiento mayor que MIN_WITNESS_GAP.
    """
    n = matriz.shape[0]

    def _norma(x: np.ndarray) -> float:
        return float(norma_coords(x, p))

    mejor: Optional[WVerdict] = None
    for reinicio in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([semilla, reinicio]))
        x = rng.standard_normal(n)
        x = x / _norma(x)

        for delta in SearchConfig.DELTA_SCHEDULE:
            restricciones = [
                {"type": "eq", "fun": lambda z: _norma(z) - 1.0},
                {"type": "ineq", "fun": lambda z, d=delta: _norma(matriz @ z) - (1.0 - d)},
            ]
            resultado = minimize(
                lambda z: -_norma(_diferencia(matriz, z)),
                x,
                method="SLSQP",
                constraints=restricciones,
                options={"maxiter": SearchConfig.SLSQP_MAX_ITERS},
            )
            if np.all(np.isfinite(resultado.x)) and _norma(resultado.x) > 0:
                x = resultado.x / _norma(resultado.x)

        if abs(_norma(matriz @ x) - 1.0) > ToleranceConfig.WITNESS_NORM_TOL:
            x, _ = ascenso_potencia(matriz, p, x, SearchConfig.POLISH_MAX_ITERS)
        if abs(_norma(matriz @ x) - 1.0) > ToleranceConfig.WITNESS_NORM_TOL:
            continue

        brecha = _norma(_diferencia(matriz, x))
        if brecha > ToleranceConfig.MIN_WITNESS_GAP and (mejor is None or brecha > mejor.gap):
            mejor = WVerdict(WStatus.FAILS, Method.NUMERIC_SEARCH, Vector(x), brecha)

    return mejor or WVerdict(WStatus.INCONCLUSIVE, Method.NUMERIC_SEARCH)


def _elegir_metodo(T: LinearOperator) -> Method:
    p = T.space.p
    if p == 2:
        return Method.ALGEBRAIC_P2
    if p in (1, INF) and T.dim <= SearchConfig.SIGN_ENUMERATION_MAX_DIM:
        return Method.SIGN_ENUMERATION
    return Method.NUMERIC_SEARCH


def _veredicto_w_prime(
    T: LinearOperator,
    tol: float,
    metodo: Method,
    restarts: int,
) -> WVerdict:
    """Despacho de rutas sin verificar la precondición de contracción."""
    if T.norm_bracket[1] < 1.0 - tol:
        return _sin_restriccion(metodo)

    if metodo == Method.ALGEBRAIC_P2:
        return _ruta_p2(T.matrix_float(), tol)
    if metodo == Method.SIGN_ENUMERATION:
        ruta = _ruta_p1 if T.space.p == 1 else _ruta_pinf
        return ruta(T.matrix, tol)
    return _busqueda_numerica(T.matrix_float(), T.space.p, restarts, SearchConfig.NORM_SEED)


def check_w_prime(
    T: LinearOperator,
    tol: float = ToleranceConfig.W_PRIME_TOL,
    method: Optional[Method] = None,
    restarts: Optional[int] = None,
) -> WVerdict:
    """
    Decide (W′): ‖x‖ = ‖Tx‖ implica Tx = x.

    p = 2 usa el autoespacio de TᵀT; p en {1, inf} enumera caras de la esfera
    (dim <= 14) con aritmética exacta si T es racional; el resto usa búsqueda
    numérica, que sólo puede refutar.
    """
    veredicto = is_contraction(T)
    if veredicto.status != ContractionStatus.YES:
        raise ContractViolationError(
            f"check_w_prime requiere una contracción certificada; cota {veredicto.bracket}"
        )

    metodo = Method(method) if method is not None else _elegir_metodo(T)
    if metodo == Method.ALGEBRAIC_P2 and T.space.p != 2:
        raise ValueError("La ruta algebraic_p2 sólo aplica a p = 2")
    if metodo == Method.SIGN_ENUMERATION and T.space.p not in (1, INF):
        raise ValueError("La ruta sign_enumeration sólo aplica a p en {1, inf}")
    if metodo == Method.SIGN_ENUMERATION and T.dim > SearchConfig.SIGN_ENUMERATION_MAX_DIM:
        logger.info(f"dim {T.dim} supera el límite de enumeración; se usa numeric_search")
        metodo = Method.NUMERIC_SEARCH

    resultado = _veredicto_w_prime(T, tol, metodo, restarts or SearchConfig.RESTARTS_PER_DELTA)
    logger.debug(f"(W′) de {T.name or 'operador'}: {resultado.status.value} ({resultado.method.value})")
    return resultado


def check_w(
    T: LinearOperator,
    tol: float = ToleranceConfig.W_PRIME_TOL,
    method: Optional[Method] = None,
    restarts: Optional[int] = None,
) -> WVerdict:
    """Condición (W); en dimensión finita coincide con (W′) (ver docstring del módulo)."""
    return replace(check_w_prime(T, tol, method, restarts), condition="W")


@dataclass(frozen=True)
class WSequenceSample:
    """Muestra finita de una sucesión de (W): brechas de norma y desplazamientos."""

    norm_gaps: Tuple[float, ...]
    displacements: Tuple[float, ...]

    @property
    def max_gap(self) -> float:
        return max(self.norm_gaps, default=0.0)

    @property
    def max_displacement(self) -> float:
        return max(self.displacements, default=0.0)


def w_sequence_defect(T: LinearOperator, xs: Sequence[Vector]) -> WSequenceSample:
    """Evalúa ‖x_n‖ - ‖Tx_n‖ y ‖x_n - Tx_n‖ sobre una muestra de la sucesión."""
    brechas, desplazamientos = [], []
    for x in xs:
        imagen = apply(T, x)
        brechas.append(float(norm(x, T.space)) - float(norm(imagen, T.space)))
        desplazamientos.append(float(norma_coords(x.coords.astype(float) - imagen.coords.astype(float), T.space.p)))
    return WSequenceSample(tuple(brechas), tuple(desplazamientos))


class VerdictHint(str, Enum):
    NO_VIOLATION_FOUND = "no_violation_found"
    CANDIDATE_VIOLATION = "candidate_violation"


@dataclass(frozen=True)
class FalsifierReport:
    best_word: Tuple[int, ...]
    best_x: Vector
    norm_gap: float
    displacement: float
    verdict_hint: VerdictHint
    words_examined: int = 0
    exact_failures: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best_word": list(self.best_word),
            "best_x": [float(x) for x in self.best_x.tolist()],
            "norm_gap": self.norm_gap,
            "displacement": self.displacement,
            "verdict_hint": self.verdict_hint.value,
            "words_examined": self.words_examined,
            "exact_failures": self.exact_failures,
        }


@dataclass(frozen=True)
class _Candidato:
    palabra: Tuple[int, ...]
    x: np.ndarray = field(repr=False)
    brecha: float
    desplazamiento: float
    exacto: bool = False


def _enumerar_palabras(n_ops: int, max_len: int, budget: int):
    palabras = (
        palabra
        for longitud in range(1, max_len + 1)
        for palabra in product(range(1, n_ops + 1), repeat=longitud)
    )
    return list(islice(palabras, budget))


def _explorar_palabra(
    ops: Sequence[LinearOperator],
    palabra: Tuple[int, ...],
    indice: int,
    seed: int,
    arranques: int,
) -> Tuple[List[_Candidato], bool]:
    W = evaluate_word(ops, palabra)
    p = W.space.p
    matriz = W.matrix_float()
    candidatos: List[_Candidato] = []
    fallo_exacto = False

    metodo = _elegir_metodo(W)
    if metodo != Method.NUMERIC_SEARCH:
        veredicto = _veredicto_w_prime(W, ToleranceConfig.W_PRIME_TOL, metodo, 0)
        if veredicto.status == WStatus.FAILS:
            fallo_exacto = True
            x = veredicto.witness.coords.astype(float)
            x = x / float(norma_coords(x, p))
            brecha = max(0.0, 1.0 - float(norma_coords(matriz @ x, p)))
            candidatos.append(_Candidato(palabra, x, brecha, float(norma_coords(_diferencia(matriz, x), p)), True))

    for arranque in range(arranques):
        rng = np.random.default_rng(np.random.SeedSequence([seed, indice, arranque]))
        x, valor = ascenso_potencia(matriz, p, rng.standard_normal(W.dim), SearchConfig.POWER_MAX_ITERS)
        brecha = max(0.0, 1.0 - valor)
        candidatos.append(_Candidato(palabra, x, brecha, float(norma_coords(_diferencia(matriz, x), p))))

    return candidatos, fallo_exacto


def semigroup_w_falsifier(
    ops: Sequence[LinearOperator],
    max_word_len: int = 3,
    budget: int = 64,
    seed: int = 0,
    starts_per_word: int = SearchConfig.FALSIFIER_STARTS_PER_WORD,
) -> FalsifierReport:
    """
    Busca palabras W y vectores unitarios x con ‖x‖ - ‖Wx‖ pequeño y ‖x - Wx‖ grande.

    Las palabras se enumeran por longitud creciente hasta agotar budget; cada
    arranque usa la semilla (seed, índice de palabra, arranque), así que el
    resultado no depende del número de hilos. Es evidencia, no prueba.
    """
    if not ops:
        raise EmptyOperatorListError("semigroup_w_falsifier requiere al menos un operador")
    require_contractions(ops)
    if max_word_len < 1 or budget < 1:
        raise ValueError("max_word_len y budget deben ser >= 1")

    palabras = _enumerar_palabras(len(ops), max_word_len, budget)
    logger.info(f"Falsificador (W): {len(palabras)} palabras, {starts_per_word} arranques por palabra")

    with ThreadPoolExecutor(max_workers=BatchConfig.MAX_WORKERS) as executor:
        resultados = list(executor.map(
            lambda args: _explorar_palabra(ops, args[1], args[0], seed, starts_per_word),
            enumerate(palabras),
        ))

    candidatos = [c for lista, _ in resultados for c in lista]
    fallos_exactos = sum(1 for _, fallo in resultados if fallo)

    umbral = SearchConfig.FALSIFIER_GAP_THRESHOLD
    admisibles = [c for c in candidatos if c.brecha < umbral]
    if admisibles:
        mejor = max(admisibles, key=lambda c: c.desplazamiento)
    else:
        mejor = min(candidatos, key=lambda c: c.brecha)

    violacion = mejor.desplazamiento > SearchConfig.FALSIFIER_DISPLACEMENT_THRESHOLD and mejor.brecha < umbral
    hint = VerdictHint.CANDIDATE_VIOLATION if violacion else VerdictHint.NO_VIOLATION_FOUND
    logger.info(
        f"Mejor palabra {list(mejor.palabra)}: brecha {mejor.brecha:.3e}, "
        f"desplazamiento {mejor.desplazamiento:.3e} -> {hint.value}"
    )
    return FalsifierReport(
        best_word=mejor.palabra,
        best_x=Vector(mejor.x),
        norm_gap=mejor.brecha,
        displacement=mejor.desplazamiento,
        verdict_hint=hint,
        words_examined=len(palabras),
        exact_failures=fallos_exactos,
    )


def _ajustar_punto_fijo(y: Vector, p: float, tol: float) -> Vector:
    """Redondea a 0 las coordenadas despreciables (y a ±max los empates en p = inf)."""
    if y.exact or p not in (1, INF):
        return y
    coords = np.array(y.coords, dtype=float)
    maximo = float(np.abs(coords).max())
    coords[np.abs(coords) <= tol * maximo] = 0.0
    if p == INF:
        empates = np.abs(coords) >= (1.0 - tol) * maximo
        coords[empates] = np.sign(coords[empates]) * maximo
    return Vector(coords)


def _funcionales_de_prueba(y: Vector, T: LinearOperator) -> Tuple[Any, List[Functional]]:
    cara = support_face(y, T.space)
    prueba = [cara.base]
    if cara.is_polyhedral:
        prueba.extend(cara.vertices(SearchConfig.MAX_FACE_VERTICES))
    return cara, prueba


def _validar_punto_fijo(T: LinearOperator, y: Vector, tol: float) -> Vector:
    verificar_dimension(T.dim, y.dim, "adjoint_support_invariance")
    norma_y = float(norm(y, T.space))
    if norma_y == 0.0:
        raise PreconditionError("y debe ser no nulo")
    residuo = float(norma_coords(apply(T, y).coords.astype(float) - y.coords.astype(float), T.space.p))
    if residuo > tol * norma_y:
        raise PreconditionError(f"y no es punto fijo: ‖Ty - y‖ = {residuo:.3e} > {tol * norma_y:.3e}")
    ajustado = _ajustar_punto_fijo(y, T.space.p, tol)
    if ajustado is not y and not np.array_equal(ajustado.coords, y.coords.astype(float)):
        logger.debug(f"Ancla de J(y) ajustada: {y.tolist()} -> {ajustado.tolist()}")
    return ajustado


@dataclass(frozen=True)
class SupportInvarianceReport:
    face_preserved: bool
    pointwise_fixed: bool
    sample: Functional
    image: Functional
    face_kind: FaceKind
    functionals_tested: int
    # y tras redondear coordenadas despreciables; J(anchor) es la cara probada
    anchor: Vector

    def to_dict(self) -> Dict[str, Any]:
        return {
            "anchor": [float(x) for x in self.anchor.tolist()],
            "face_preserved": self.face_preserved,
            "pointwise_fixed": self.pointwise_fixed,
            "face_kind": self.face_kind.value,
            "functionals_tested": self.functionals_tested,
            "sample": [float(x) for x in self.sample.tolist()],
            "image": [float(x) for x in self.image.tolist()],
        }


def adjoint_support_invariance(
    T: LinearOperator,
    y: Vector,
    tol: float = ToleranceConfig.PAIRING_TOL,
) -> SupportInvarianceReport:
    """
    Para y fijo por T, comprueba si T* deja invariante J(y) y si lo fija punto a punto.

    Se prueban la base de la cara y, si es poliédrica, todos sus vértices.
    """
    y = _validar_punto_fijo(T, y, tol)
    cara, prueba = _funcionales_de_prueba(y, T)
    T_adj = adjoint(T)

    preservada, fija = True, True
    for f in prueba:
        imagen = apply(T_adj, f)
        if not face_contains(cara, imagen, tol):
            preservada = False
        a, b = compatibilizar(imagen.coords, f.coords)
        if norma_coords(a - b, f.dual_p) > tol:
            fija = False

    return SupportInvarianceReport(
        face_preserved=preservada,
        pointwise_fixed=fija,
        sample=cara.base,
        image=apply(T_adj, cara.base),
        face_kind=cara.kind,
        functionals_tested=len(prueba),
        anchor=y,
    )


def _aplicar_traspuesta(W: LinearOperator, f: Functional) -> Functional:
    matriz, coords = compatibilizar(W.matrix, f.coords)
    return Functional(matriz.T @ coords, f.dual_p)


@dataclass(frozen=True)
class OrbitPairingReport:
    max_defect: float
    words_checked: int
    functionals_tested: int
    holds: bool


def adjoint_orbit_pairing(
    ops: Sequence[LinearOperator],
    y: Vector,
    max_word_len: int = 3,
    tol: float = ToleranceConfig.PAIRING_TOL,
) -> OrbitPairingReport:
    """Para y en el conjunto fijo común y f en J(y): (W*f)(y) = f(y) en toda palabra W."""
    if not ops:
        raise EmptyOperatorListError("adjoint_orbit_pairing requiere al menos un operador")
    for T in ops:
        _validar_punto_fijo(T, y, max(tol, ToleranceConfig.KERNEL_TOL))
    y = _ajustar_punto_fijo(y, ops[0].space.p, tol)
    _, prueba = _funcionales_de_prueba(y, ops[0])

    palabras = _enumerar_palabras(len(ops), max_word_len, len(ops) ** max_word_len * max_word_len)
    defecto = 0.0
    for palabra in palabras:
        W = evaluate_word(ops, palabra)
        for f in prueba:
            diferencia = abs(float(pair(_aplicar_traspuesta(W, f), y)) - float(pair(f, y)))
            defecto = max(defecto, diferencia)

    return OrbitPairingReport(defecto, len(palabras), len(prueba), defecto <= tol)

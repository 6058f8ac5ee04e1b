"""
Motor de productos no restringidos S_n = T_{r(n)} ⋯ T_{r(1)}.

Calendarios de palabras, la iteración con criterio de Cauchy por ventana,
la clasificación del límite y las auditorías de monotonía.
"""

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import cycle
from typing import Any, Deque, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .config import BatchConfig, StopDefaults, ToleranceConfig
from .logger_config import obtener_logger
from .operators import (
    EmptyOperatorListError,
    LinearOperator,
    common_fixed_space,
    require_contractions,
)
from .space import INF, Scalar, Vector, compatibilizar, norma_coords, verificar_dimension

logger = obtener_logger(__name__)

_BLOQUE_ALEATORIO = 1024


class ScheduleError(Exception):
    """Calendario inválido o incompatible con los operadores."""
    pass


class MissingSnapshotsError(Exception):
    """La traza no conserva el historial completo requerido."""
    pass


class SchedulePolicy(str, Enum):
    SEEDED_UNIFORM = "seeded_uniform"
    ROUND_ROBIN = "round_robin"
    MARKOV = "markov"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class WordSchedule:
    """
    Aplicación r: ℕ -> {1..N}. Los índices emitidos son 1-based.

    scripted sin fallback repite su guion indefinidamente.
    """

    policy: SchedulePolicy
    n_generators: int
    seed: int = 0
    transition: Optional[Tuple[Tuple[float, ...], ...]] = None
    script: Tuple[int, ...] = ()
    fallback: Optional["WordSchedule"] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "policy", SchedulePolicy(self.policy))
        if self.n_generators < 1:
            raise ScheduleError("n_generators debe ser >= 1")

        if self.policy == SchedulePolicy.MARKOV:
            if self.transition is None:
                raise ScheduleError("markov requiere una matriz de transición")
            matriz = np.asarray(self.transition, dtype=float)
            if matriz.shape != (self.n_generators, self.n_generators):
                raise ScheduleError(f"Matriz de transición {matriz.shape} incompatible con N={self.n_generators}")
            if np.any(matriz < 0) or not np.allclose(matriz.sum(axis=1), 1.0, rtol=0.0, atol=1e-12):
                raise ScheduleError("Las filas de la matriz de transición deben ser distribuciones")
            object.__setattr__(self, "transition", tuple(tuple(float(x) for x in fila) for fila in matriz))

        if self.policy == SchedulePolicy.SCRIPTED:
            guion = tuple(int(i) for i in self.script)
            if not guion:
                raise ScheduleError("scripted requiere un guion no vacío")
            fuera = [i for i in guion if not 1 <= i <= self.n_generators]
            if fuera:
                raise ScheduleError(f"Índices fuera de 1..{self.n_generators}: {fuera}")
            object.__setattr__(self, "script", guion)
            if self.fallback is not None and self.fallback.n_generators != self.n_generators:
                raise ScheduleError("El fallback debe tener el mismo número de generadores")

    @classmethod
    def seeded_uniform(cls, n_generators: int, seed: int) -> "WordSchedule":
        return cls(SchedulePolicy.SEEDED_UNIFORM, n_generators, seed=seed)

    @classmethod
    def round_robin(cls, n_generators: int) -> "WordSchedule":
        return cls(SchedulePolicy.ROUND_ROBIN, n_generators)

    @classmethod
    def markov(cls, transition: Sequence[Sequence[float]], seed: int) -> "WordSchedule":
        filas = tuple(tuple(fila) for fila in transition)
        return cls(SchedulePolicy.MARKOV, len(filas), seed=seed, transition=filas)

    @classmethod
    def scripted(cls, script: Sequence[int], n_generators: int, fallback: Optional["WordSchedule"] = None) -> "WordSchedule":
        return cls(SchedulePolicy.SCRIPTED, n_generators, script=tuple(script), fallback=fallback)

    @property
    def is_fair(self) -> bool:
        """Cada índice aparece infinitas veces."""
        if self.policy == SchedulePolicy.MARKOV:
            matriz = np.asarray(self.transition) > 0
            n_componentes, _ = connected_components(matriz, directed=True, connection="strong")
            return n_componentes == 1
        if self.policy == SchedulePolicy.SCRIPTED:
            if self.fallback is not None:
                return self.fallback.is_fair
            return set(self.script) == set(range(1, self.n_generators + 1))
        return True

    def indices(self) -> Iterator[int]:
        """Flujo infinito y determinista de índices 1..N."""
        N = self.n_generators

        if self.policy == SchedulePolicy.ROUND_ROBIN:
            yield from cycle(range(1, N + 1))

        elif self.policy == SchedulePolicy.SEEDED_UNIFORM:
            rng = np.random.default_rng(self.seed)
            while True:
                for i in rng.integers(1, N + 1, size=_BLOQUE_ALEATORIO):
                    yield int(i)

        elif self.policy == SchedulePolicy.MARKOV:
            rng = np.random.default_rng(self.seed)
            acumuladas = np.cumsum(np.asarray(self.transition), axis=1)
            estado = int(rng.integers(0, N))
            while True:
                yield estado + 1
                siguiente = int(np.searchsorted(acumuladas[estado], rng.random(), side="right"))
                estado = min(siguiente, N - 1)

        else:
            yield from self.script
            if self.fallback is not None:
                yield from self.fallback.indices()
            else:
                yield from cycle(self.script)

    def to_dict(self) -> Dict[str, Any]:
        datos: Dict[str, Any] = {"policy": self.policy.value, "n_generators": self.n_generators}
        if self.policy in (SchedulePolicy.SEEDED_UNIFORM, SchedulePolicy.MARKOV):
            datos["seed"] = self.seed
        if self.transition is not None:
            datos["transition"] = [list(fila) for fila in self.transition]
        if self.script:
            datos["script"] = list(self.script)
        if self.fallback is not None:
            datos["fallback"] = self.fallback.to_dict()
        return datos


@dataclass(frozen=True)
class StopCriteria:
    max_iters: int = StopDefaults.MAX_ITERS
    cauchy_tol: float = StopDefaults.CAUCHY_TOL
    cauchy_window: int = StopDefaults.CAUCHY_WINDOW
    stagnation_tol: float = StopDefaults.STAGNATION_TOL

    def __post_init__(self) -> None:
        if isinstance(self.max_iters, bool) or int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters debe ser un entero >= 1; obtenido {self.max_iters!r}")
        if isinstance(self.cauchy_window, bool) or int(self.cauchy_window) != self.cauchy_window or self.cauchy_window < 1:
            raise ValueError(f"cauchy_window debe ser un entero >= 1; obtenido {self.cauchy_window!r}")
        for nombre in ("cauchy_tol", "stagnation_tol"):
            valor = getattr(self, nombre)
            if not isinstance(valor, (int, float)) or isinstance(valor, bool) or not valor > 0:
                raise ValueError(f"{nombre} debe ser > 0; obtenido {valor!r}")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        object.__setattr__(self, "cauchy_window", int(self.cauchy_window))
        object.__setattr__(self, "cauchy_tol", float(self.cauchy_tol))
        object.__setattr__(self, "stagnation_tol", float(self.stagnation_tol))


class StopReason(str, Enum):
    CONVERGED = "converged"
    BUDGET = "budget"
    STAGNATED = "stagnated"


@dataclass(frozen=True)
class TraceStep:
    n: int
    r_n: int
    norm: Scalar
    increment: Scalar


@dataclass
class Trace:
    """Registro de la iteración; snapshots[n] = S_n x cada stride pasos (incluye n = 0 y el final)."""

    steps: List[TraceStep] = field(default_factory=list)
    initial_norm: Scalar = 0.0
    snapshots: Dict[int, Vector] = field(default_factory=dict)
    stride: int = StopDefaults.SNAPSHOT_STRIDE
    limit_estimate: Optional[Vector] = None
    final: Optional[Vector] = None
    stop_reason: StopReason = StopReason.BUDGET
    fair: bool = True

    @property
    def iters(self) -> int:
        return len(self.steps)


def _norma_rapida(x: np.ndarray, p: float) -> Scalar:
    if x.dtype == object:
        return norma_coords(x, p)
    if p == 2:
        return float(np.linalg.norm(x))
    if p == 1:
        return float(np.abs(x).sum())
    if p == INF:
        return float(np.abs(x).max())
    return float(norma_coords(x, p))


def _preparar(ops: Sequence[LinearOperator], x0: Vector) -> Tuple[List[np.ndarray], np.ndarray, float]:
    espacio = require_contractions(ops)
    verificar_dimension(espacio.dim, x0.dim, "iterate")
    exacto = x0.exact and all(T.exact for T in ops)
    if exacto:
        return [T.matrix for T in ops], x0.coords, espacio.p
    return [T.matrix_float() for T in ops], x0.coords.astype(float), espacio.p


def iterate(
    ops: Sequence[LinearOperator],
    schedule: WordSchedule,
    x0: Vector,
    stop: Optional[StopCriteria] = None,
    stride: int = StopDefaults.SNAPSHOT_STRIDE,
) -> Trace:
    """
    Aplica x <- T_{r(n)} x hasta cumplir el criterio de parada.

    converged: cauchy_window incrementos consecutivos por debajo de cauchy_tol.
    stagnated: durante una ventana completa todos los incrementos superan
    max(cauchy_tol, sqrt(stagnation_tol))·‖x‖ y la norma baja a lo sumo
    stagnation_tol·‖x‖ y a lo sumo STAGNATION_DROP_RATIO·Σ incremento² / (2‖x‖);
    es el ciclo isométrico. Una proyección en ℓ₂ baja la norma en
    incremento² / (‖x‖ + ‖Px‖), así que una ejecución convergente no lo cumple
    aunque ‖x‖ sea grande.
    budget: se alcanzó max_iters.
    """
    stop = stop or StopCriteria()
    if schedule.n_generators != len(ops):
        raise ScheduleError(f"El calendario tiene {schedule.n_generators} generadores y hay {len(ops)} operadores")
    if stride < 1:
        raise ValueError("stride debe ser >= 1")

    matrices, x, p = _preparar(ops, x0)
    umbral_ciclo = max(stop.cauchy_tol, math.sqrt(stop.stagnation_tol))

    traza = Trace(initial_norm=_norma_rapida(x, p), stride=stride, fair=schedule.is_fair)
    traza.snapshots[0] = Vector(x)
    if not traza.fair:
        logger.warning("Calendario no equitativo: algún generador no se aplica infinitas veces")

    normas: List[Scalar] = [traza.initial_norm]
    cuadrados: Deque[float] = deque(maxlen=stop.cauchy_window)
    pequenos, grandes = 0, 0
    indices = schedule.indices()

    for n in range(1, stop.max_iters + 1):
        r = next(indices)
        siguiente = matrices[r - 1] @ x
        incremento = _norma_rapida(siguiente - x, p)
        norma = _norma_rapida(siguiente, p)
        x = siguiente

        traza.steps.append(TraceStep(n, r, norma, incremento))
        normas.append(norma)
        if n % stride == 0:
            traza.snapshots[n] = Vector(x)

        pequenos = pequenos + 1 if incremento < stop.cauchy_tol else 0
        grandes = grandes + 1 if incremento > umbral_ciclo * norma else 0
        cuadrados.append(float(incremento) ** 2)

        if pequenos >= stop.cauchy_window:
            traza.stop_reason = StopReason.CONVERGED
            break
        if grandes >= stop.cauchy_window and norma > 0:
            caida = float(normas[n - stop.cauchy_window] - norma)
            energia = sum(cuadrados) / (2.0 * float(norma))
            if caida <= stop.stagnation_tol * float(norma) and caida <= StopDefaults.STAGNATION_DROP_RATIO * energia:
                traza.stop_reason = StopReason.STAGNATED
                break

    traza.final = Vector(x)
    traza.snapshots[traza.iters] = traza.final
    if traza.stop_reason == StopReason.CONVERGED:
        traza.limit_estimate = traza.final

    logger.debug(f"Iteración detenida por {traza.stop_reason.value} tras {traza.iters} pasos")
    return traza


@dataclass(frozen=True)
class LimitClassification:
    in_common_fixed_set: bool
    distance: float
    residuals: Tuple[Scalar, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "in_common_fixed_set": self.in_common_fixed_set,
            "distance": self.distance,
            "residuals": [float(r) for r in self.residuals],
        }


def classify_limit(
    z: Vector,
    ops: Sequence[LinearOperator],
    tol: float = ToleranceConfig.CLASSIFY_TOL,
) -> LimitClassification:
    """Residuos ‖T_j z - z‖ y distancia euclídea de z al conjunto fijo común."""
    if not ops:
        raise EmptyOperatorListError("classify_limit requiere al menos un operador")
    p = ops[0].space.p
    residuos = []
    for T in ops:
        verificar_dimension(T.dim, z.dim, "classify_limit")
        matriz, coords = compatibilizar(T.matrix, z.coords)
        residuos.append(norma_coords(matriz @ coords - coords, p))

    escala = max(1.0, float(norma_coords(z.coords, p)))
    dentro = all(r <= tol * escala for r in residuos)
    distancia = common_fixed_space(ops).distance(z)
    return LimitClassification(dentro, distancia, tuple(residuos))


def monotonicity_audit(trace: Trace) -> float:
    """max(0, max_n ‖S_n x‖ - ‖S_{n-1} x‖)."""
    anterior = trace.initial_norm
    peor: Scalar = 0
    for paso in trace.steps:
        peor = max(peor, paso.norm - anterior)
        anterior = paso.norm
    return float(peor)


@dataclass(frozen=True)
class SubsequenceReport:
    z_is_common_fixed: bool
    distance_monotone: bool
    max_increase: float


def subsequence_lemma_check(
    trace: Trace,
    z: Vector,
    ops: Sequence[LinearOperator],
    tol: float = ToleranceConfig.MONOTONICITY_TOL,
) -> SubsequenceReport:
    """
    Si z es punto fijo común, n -> ‖S_n x - z‖ debe ser no creciente.

    Un límite numérico sólo es fijo salvo su residuo r = max_j ‖T_j z - z‖, y
    ‖S_{n+1} x - z‖ <= ‖S_n x - z‖ + r; la tolerancia efectiva es tol + r.
    """
    faltantes = [n for n in range(trace.iters + 1) if n not in trace.snapshots]
    if faltantes:
        raise MissingSnapshotsError(
            f"La traza no guarda todos los snapshots (stride {trace.stride}); faltan {len(faltantes)}"
        )

    p = ops[0].space.p if ops else 2.0
    clasificacion = classify_limit(z, ops)
    holgura = tol + float(max(clasificacion.residuals))

    anterior: Optional[Scalar] = None
    peor: Scalar = 0
    for n in range(trace.iters + 1):
        a, b = compatibilizar(trace.snapshots[n].coords, z.coords)
        distancia = norma_coords(a - b, p)
        if anterior is not None:
            peor = max(peor, distancia - anterior)
        anterior = distancia

    # Si z no es punto fijo común la monotonía no se afirma
    fijo = clasificacion.in_common_fixed_set
    return SubsequenceReport(fijo, fijo and float(peor) <= holgura, float(peor))


@dataclass(frozen=True)
class OrderSensitivityReport:
    limits: Tuple[Vector, ...]
    diameter: Scalar
    non_converged: Tuple[int, ...]

    @property
    def all_converged(self) -> bool:
        return not self.non_converged


def _diametro(puntos: Sequence[Vector], p: float) -> Scalar:
    diametro: Scalar = 0
    for i in range(len(puntos)):
        for j in range(i + 1, len(puntos)):
            a, b = compatibilizar(puntos[i].coords, puntos[j].coords)
            diametro = max(diametro, norma_coords(a - b, p))
    return diametro if isinstance(diametro, Fraction) else float(diametro)


def order_sensitivity(
    ops: Sequence[LinearOperator],
    x0: Vector,
    n_schedules: int,
    seed: int,
    stop: Optional[StopCriteria] = None,
    schedules: Optional[Sequence[WordSchedule]] = None,
) -> OrderSensitivityReport:
    """
    Ejecuta iterate bajo varios calendarios y mide el diámetro de los límites en la norma del espacio.

    Sin calendarios explícitos usa n_schedules calendarios seeded_uniform con
    semillas derivadas de (seed, ensayo).
    """
    if not ops:
        raise EmptyOperatorListError("order_sensitivity requiere al menos un operador")
    if schedules is None:
        schedules = [
            WordSchedule.seeded_uniform(
                len(ops), int(np.random.SeedSequence([seed, ensayo]).generate_state(1)[0])
            )
            for ensayo in range(n_schedules)
        ]

    with ThreadPoolExecutor(max_workers=BatchConfig.MAX_WORKERS) as executor:
        trazas = list(executor.map(lambda calendario: iterate(ops, calendario, x0, stop), schedules))

    no_convergidos = tuple(i for i, t in enumerate(trazas) if t.stop_reason != StopReason.CONVERGED)
    if no_convergidos:
        logger.warning(f"{len(no_convergidos)} de {len(trazas)} ensayos no convergieron")

    limites = tuple(t.limit_estimate or t.final for t in trazas)
    return OrderSensitivityReport(limites, _diametro(limites, ops[0].space.p), no_convergidos)


@dataclass(frozen=True)
class AuditReport:
    trace: Trace
    monotonicity_max_violation: float
    classification: LimitClassification
    subsequence: Optional[SubsequenceReport] = None

    @property
    def monotone(self) -> bool:
        return self.monotonicity_max_violation <= ToleranceConfig.MONOTONICITY_TOL

    @property
    def violations(self) -> List[str]:
        """Invariantes que una ejecución con contracciones certificadas no puede romper."""
        fallos = []
        if not self.monotone:
            fallos.append(f"monotonía: aumento de norma {self.monotonicity_max_violation:.3e}")
        convergida = self.trace.stop_reason == StopReason.CONVERGED
        if convergida and self.trace.fair and not self.classification.in_common_fixed_set:
            fallos.append("el límite no es punto fijo común")
        if (
            self.subsequence is not None
            and self.subsequence.z_is_common_fixed
            and not self.subsequence.distance_monotone
        ):
            fallos.append(f"distancia al límite crece {self.subsequence.max_increase:.3e}")
        return fallos


def audit_run(
    ops: Sequence[LinearOperator],
    schedule: WordSchedule,
    x0: Vector,
    stop: Optional[StopCriteria] = None,
    stride: int = StopDefaults.SNAPSHOT_STRIDE,
) -> AuditReport:
    """iterate más las auditorías de monotonía, clasificación del límite y distancia al límite."""
    traza = iterate(ops, schedule, x0, stop, stride)
    violacion = monotonicity_audit(traza)
    clasificacion = classify_limit(traza.limit_estimate or traza.final, ops)

    subsecuencia = None
    if stride == 1 and traza.limit_estimate is not None:
        subsecuencia = subsequence_lemma_check(traza, traza.limit_estimate, ops)

    reporte = AuditReport(traza, violacion, clasificacion, subsecuencia)
    for fallo in reporte.violations:
        logger.error(f"Auditoría violada: {fallo}")
    return reporte

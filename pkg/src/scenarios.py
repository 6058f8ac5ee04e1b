"""
Catálogo de escenarios: el ejemplo en ℓ₁² de dos proyecciones sin proyección
conmutante, proyecciones ortogonales en ℓ₂ y contraejemplos.

Sobre el ejemplo en ℓ₁²: T₁ y T₂ son idempotentes como matrices
(T₁² = T₁ y T₂² = T₂, ver idempotence_report), de modo que ambas son
proyecciones contractivas sobre span{e₁}, el conjunto fijo común.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import orth

from .logger_config import obtener_logger
from .operators import LinearOperator, common_fixed_space
from .space import InvalidInputError, NormSpec, SpaceError, Vector, parse_exponent, parse_scalar

logger = obtener_logger(__name__)


class UnknownScenarioError(Exception):
    """Nombre de escenario no registrado."""
    pass


class ScenarioFileError(Exception):
    """Archivo de escenario ilegible o mal formado."""
    pass


@dataclass(frozen=True)
class ScenarioExpectation:
    fixed_space_dim: int
    w_prime: str
    adjoint_w_prime: str
    oracle: Optional[str] = None


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    space: NormSpec
    ops: Tuple[LinearOperator, ...]
    default_x0: Vector
    expected: Optional[ScenarioExpectation] = None
    description: str = ""
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "space": self.space.label,
            "p": "inf" if self.space.p == float("inf") else self.space.p,
            "dim": self.space.dim,
            "n_ops": len(self.ops),
            "exact": all(T.exact for T in self.ops),
            "params": self.params,
            "description": self.description,
            "expected": None if self.expected is None else {
                "fixed_space_dim": self.expected.fixed_space_dim,
                "w_prime": self.expected.w_prime,
                "adjoint_w_prime": self.expected.adjoint_w_prime,
                "oracle": self.expected.oracle,
            },
        }


def example1(exact: bool = True) -> Scenario:
    """ℓ₁², T₁ = [[1, 1/2], [0, 0]] y T₂ = [[1, 1/3], [0, 0]]."""
    espacio = NormSpec(2, 1)
    T1 = LinearOperator.from_rows([[1, "1/2"], [0, 0]], espacio, exact=exact, name="T1")
    T2 = LinearOperator.from_rows([[1, "1/3"], [0, 0]], espacio, exact=exact, name="T2")
    return Scenario(
        name="example1",
        space=espacio,
        ops=(T1, T2),
        default_x0=Vector.from_values([0, 1], exact=exact),
        expected=ScenarioExpectation(fixed_space_dim=1, w_prime="holds", adjoint_w_prime="fails"),
        description="Dos proyecciones contractivas sobre span{e1} en l1^2 sin proyección conmutante",
        params={"exact": exact},
    )


def _proyector(base: np.ndarray) -> np.ndarray:
    Q = orth(base)
    return Q @ Q.T


def _complemento_aleatorio(rng: np.random.Generator, S: np.ndarray, dim: int, k: int) -> np.ndarray:
    """k direcciones gaussianas proyectadas fuera de span(S)."""
    G = rng.standard_normal((dim, k))
    if S.shape[1]:
        G = G - S @ (S.T @ G)
    return G


def _proyecciones_con_interseccion(
    dim: int,
    compartida: int,
    extras: Sequence[int],
    seed: int,
) -> List[np.ndarray]:
    if compartida < 0 or any(e < 0 for e in extras):
        raise ValueError("Las dimensiones deben ser no negativas")
    if compartida + sum(extras[:2]) > dim:
        raise ValueError(f"compartida + extras ({compartida} + {sum(extras[:2])}) excede dim={dim}")
    rng = np.random.default_rng(seed)
    S = orth(rng.standard_normal((dim, compartida))) if compartida else np.zeros((dim, 0))
    return [
        _proyector(np.hstack([S, _complemento_aleatorio(rng, S, dim, extra)])) if compartida + extra else np.zeros((dim, dim))
        for extra in extras
    ]


def von_neumann_2proj(dim: int = 20, seed: int = 0, shared: Optional[int] = None, extra: Optional[int] = None) -> Scenario:
    """
    Dos proyecciones ortogonales sobre M = S ⊕ A y N = S ⊕ B en ℓ₂^dim.

    S es compartido; A y B son gaussianos proyectados fuera de S, así que
    genéricamente M ∩ N = S.
    """
    shared = max(1, dim // 4) if shared is None else shared
    extra = (dim - shared) // 3 if extra is None else extra
    espacio = NormSpec(dim, 2)
    P_M, P_N = _proyecciones_con_interseccion(dim, shared, [extra, extra], seed)
    x0 = np.random.default_rng(np.random.SeedSequence([seed, 1])).standard_normal(dim)
    return Scenario(
        name="von_neumann_2proj",
        space=espacio,
        ops=(LinearOperator(P_M, espacio, name="P_M"), LinearOperator(P_N, espacio, name="P_N")),
        default_x0=Vector(x0),
        expected=ScenarioExpectation(shared, "holds", "holds", oracle="orthogonal_projection"),
        description="Proyecciones alternadas de von Neumann con intersección forzada",
        params={"dim": dim, "seed": seed, "shared": shared, "extra": extra},
    )


def random_projections(n_ops: int = 4, dim: int = 10, seed: int = 0, shared: Optional[int] = None) -> Scenario:
    """N proyecciones ortogonales sobre Y ⊕ A_j con Y compartido."""
    if n_ops < 1:
        raise ValueError("n_ops debe ser >= 1")
    shared = max(1, dim // 5) if shared is None else shared
    extra = (dim - shared) // 2
    espacio = NormSpec(dim, 2)
    proyectores = _proyecciones_con_interseccion(dim, shared, [extra] * n_ops, seed)
    x0 = np.random.default_rng(np.random.SeedSequence([seed, 1])).standard_normal(dim)
    dim_fijo = shared + extra if n_ops == 1 else shared
    return Scenario(
        name="random_projections",
        space=espacio,
        ops=tuple(LinearOperator(P, espacio, name=f"P{j}") for j, P in enumerate(proyectores, 1)),
        default_x0=Vector(x0),
        expected=ScenarioExpectation(dim_fijo, "holds", "holds", oracle="orthogonal_projection"),
        description="Productos aleatorios de proyecciones ortogonales",
        params={"n_ops": n_ops, "dim": dim, "seed": seed, "shared": shared},
    )


def diagonal_contractions(dim: int = 4, p: Union[float, str] = 1, seed: int = 0, n_ops: int = 2) -> Scenario:
    """Contracciones diagonales diag(1, d_2, ..., d_n) con d_i uniformes en (0.1, 0.95)."""
    espacio = NormSpec(dim, parse_exponent(p))
    rng = np.random.default_rng(seed)
    ops = []
    for j in range(1, n_ops + 1):
        diagonal = np.concatenate([[1.0], rng.uniform(0.1, 0.95, size=dim - 1)])
        ops.append(LinearOperator(np.diag(diagonal), espacio, name=f"D{j}"))
    x0 = np.random.default_rng(np.random.SeedSequence([seed, 1])).standard_normal(dim)
    # En ℓ₁ falla el adjunto (ℓ_∞); en ℓ_∞ falla el propio generador por x = e₁ + e_k
    directo = "fails" if espacio.p == float("inf") and dim > 1 else "holds"
    adjunto = "fails" if espacio.p == 1 and dim > 1 else "holds"
    return Scenario(
        name="diagonal_contractions",
        space=espacio,
        ops=tuple(ops),
        default_x0=Vector(x0),
        expected=ScenarioExpectation(1, directo, adjunto),
        description="Contracciones diagonales con conjunto fijo span{e1}",
        params={"dim": dim, "p": "inf" if espacio.p == float("inf") else espacio.p, "seed": seed, "n_ops": n_ops},
    )


def rotation_counterexample() -> Scenario:
    """Rotación de 90° en ℓ₂²: isometría sin vectores fijos, falla (W′)."""
    espacio = NormSpec(2, 2)
    R = LinearOperator.from_rows([[0, -1], [1, 0]], espacio, name="R")
    return Scenario(
        name="rotation_counterexample",
        space=espacio,
        ops=(R,),
        default_x0=Vector.from_values([1, 0]),
        expected=ScenarioExpectation(0, "fails", "fails"),
        description="Rotación de 90 grados; las órbitas no convergen",
    )


SCENARIO_BUILDERS: Dict[str, Callable[..., Scenario]] = {
    "example1": example1,
    "von_neumann_2proj": von_neumann_2proj,
    "random_projections": random_projections,
    "diagonal_contractions": diagonal_contractions,
    "rotation_counterexample": rotation_counterexample,
}


def catalog() -> List[Scenario]:
    """Escenarios incorporados con sus parámetros por defecto."""
    return [
        example1(),
        von_neumann_2proj(20, 0),
        random_projections(4, 10, 0),
        diagonal_contractions(4, 1, 0),
        rotation_counterexample(),
    ]


def build_scenario(name: str, **params: Any) -> Scenario:
    if name not in SCENARIO_BUILDERS:
        raise UnknownScenarioError(
            f"Escenario desconocido '{name}'; disponibles: {', '.join(SCENARIO_BUILDERS)}"
        )
    try:
        return SCENARIO_BUILDERS[name](**params)
    except TypeError as e:
        raise UnknownScenarioError(f"Parámetros inválidos para '{name}': {e}")


def load_scenario_file(path: Union[str, Path], exact: bool = False) -> Scenario:
    """
    Carga {"name", "p", "operators": [matriz, ...], "x0"} desde JSON.

    Las entradas pueden ser números o cadenas racionales ("1/3").
    """
    ruta = Path(path)
    try:
        with open(ruta, "r", encoding="utf-8") as f:
            datos = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioFileError(f"No se pudo leer {ruta}: {e}")

    if not isinstance(datos, dict) or not isinstance(datos.get("operators"), list) or not datos["operators"]:
        raise ScenarioFileError(f"{ruta}: se requiere una lista no vacía 'operators'")

    try:
        dim = len(datos["operators"][0])
        espacio = NormSpec(dim, parse_exponent(datos.get("p", 2)))
        ops = tuple(
            LinearOperator.from_rows(matriz, espacio, exact=exact, name=f"T{j}")
            for j, matriz in enumerate(datos["operators"], 1)
        )
        x0 = Vector.from_values(datos.get("x0") or [1] * dim, exact=exact)
    except (SpaceError, ValueError, TypeError) as e:
        raise ScenarioFileError(f"{ruta}: {e}")

    if x0.dim != dim:
        raise ScenarioFileError(f"{ruta}: x0 tiene dimensión {x0.dim} y los operadores {dim}")

    return Scenario(
        name=str(datos.get("name", ruta.stem)),
        space=espacio,
        ops=ops,
        default_x0=x0,
        description=f"Operadores cargados de {ruta.name}",
        params={"path": str(ruta), "exact": exact},
    )


@dataclass(frozen=True)
class ParameterConstraint:
    """Ecuaciones afines a + b·β = 0 que impone la conmutación con un generador."""

    generator: str
    equations: Tuple[Tuple[Fraction, Fraction], ...]
    value: Optional[Fraction]
    feasible: bool


@dataclass(frozen=True)
class ImpossibilityCertificate:
    parameter_constraints: Tuple[ParameterConstraint, ...]
    consistent: bool
    explanation: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "constraints": {
                c.generator: None if c.value is None else str(c.value)
                for c in self.parameter_constraints
            },
            "consistent": self.consistent,
            "explanation": self.explanation,
        }


def _conmutador(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def _resolver_afin(ecuaciones: Sequence[Tuple[Fraction, Fraction]]) -> Tuple[Optional[Fraction], bool]:
    """Resuelve exactamente el sistema {a + b·β = 0}; devuelve (β, factible)."""
    valor: Optional[Fraction] = None
    for a, b in ecuaciones:
        if b == 0:
            if a != 0:
                return None, False
            continue
        candidato = -a / b
        if valor is not None and candidato != valor:
            return None, False
        valor = candidato
    return valor, True


def derivar_forma_proyeccion() -> Tuple[np.ndarray, np.ndarray]:
    """
    Deriva exactamente Q = A0 + β·A1 para toda proyección lineal de ℓ₁² con imagen span{e₁}.

    Con imagen span{e₁} la segunda fila de Q = [[a, b], [0, 0]] es nula, y
    Q² = [[a², a·b], [0, 0]]. Q² = Q da a(a - 1) = 0 y (a - 1)·b = 0. Con a = 0
    queda b = 0 y Q = 0, cuya imagen no es span{e₁}; por lo tanto a = 1, es
    decir Q e₁ = e₁, y b = β queda libre. Se comprueba además la identidad
    Q(β)² = Q(β) coeficiente a coeficiente en β.
    """
    uno, cero = Fraction(1), Fraction(0)
    raices = [a for a in (cero, uno) if a * a - a == 0]
    admisibles = []
    for a in raices:
        b_libre = a - 1 == 0
        if a == 0 and not b_libre:
            # (a - 1)·b = 0 da b = 0, y Q = 0 no tiene imagen span{e₁}
            continue
        admisibles.append(a)
    if admisibles != [uno]:
        raise InvalidInputError(f"La idempotencia no fija el coeficiente de e₁: {admisibles}")

    A0 = np.array([[admisibles[0], cero], [cero, cero]], dtype=object)
    A1 = np.array([[cero, uno], [cero, cero]], dtype=object)
    # Q(β)² = A0² + β(A0·A1 + A1·A0) + β²·A1²
    identidades = (
        np.all(A0 @ A0 == A0),
        np.all(A0 @ A1 + A1 @ A0 == A1),
        np.all(A1 @ A1 == 0),
    )
    if not all(identidades):
        raise InvalidInputError("Q(β) = A0 + β·A1 no es idempotente para todo β")
    return A0, A1


def example1_no_commuting_projection(ops: Optional[Sequence[LinearOperator]] = None) -> ImpossibilityCertificate:
    """
    Certifica que ninguna proyección contractiva de ℓ₁² sobre span{e₁} conmuta con todos los generadores.

    derivar_forma_proyeccion da Q = A0 + β·A1 con A0 = [[1, 0], [0, 0]] y
    A1 = [[0, 1], [0, 0]]. La contracción en ℓ₁ exige |β| <= 1. Cada entrada de
    [Q, T] = [A0, T] + β[A1, T] es afín en β.
    """
    ops = example1(exact=True).ops if ops is None else ops
    A0, A1 = derivar_forma_proyeccion()

    restricciones = []
    for j, T in enumerate(ops, 1):
        if T.dim != 2:
            raise InvalidInputError("El certificado está definido para operadores sobre ℓ₁²")
        matriz = np.array([[parse_scalar(x, True) for x in fila] for fila in T.matrix], dtype=object)
        C0, C1 = _conmutador(A0, matriz), _conmutador(A1, matriz)
        ecuaciones = tuple(
            (C0[i, k], C1[i, k]) for i in range(2) for k in range(2) if C0[i, k] != 0 or C1[i, k] != 0
        )
        valor, factible = _resolver_afin(ecuaciones)
        if valor is not None and abs(valor) > 1:
            factible = False
        restricciones.append(ParameterConstraint(T.name or f"T{j}", ecuaciones, valor, factible))

    valores = {c.value for c in restricciones if c.value is not None}
    consistente = all(c.feasible for c in restricciones) and len(valores) <= 1

    explicacion = {
        "projection_form": "Q = [[1, beta], [0, 0]]",
        "idempotence": "Q^2 = Q con imagen span{e1}: a(a - 1) = 0 y (a - 1)b = 0; a = 0 da Q = 0, luego Q e1 = e1",
        "contraction_bound": "|beta| <= 1",
        "values": {c.generator: None if c.value is None else str(c.value) for c in restricciones},
        "conflict": not consistente,
    }
    logger.info(f"Certificado de proyección conmutante: consistente={consistente}, valores {explicacion['values']}")
    return ImpossibilityCertificate(tuple(restricciones), consistente, explicacion)


def idempotence_report(scenario: Scenario) -> Dict[str, bool]:
    """T² = T por generador; exacto en modo racional."""
    reporte = {}
    for j, T in enumerate(scenario.ops, 1):
        cuadrado = T.matrix @ T.matrix
        if T.exact:
            idempotente = bool(np.all(cuadrado == T.matrix))
        else:
            idempotente = bool(np.allclose(cuadrado, T.matrix, rtol=0.0, atol=1e-12))
        reporte[T.name or f"T{j}"] = idempotente
    return reporte


def expected_limit_oracle(s: Scenario, x0: Vector) -> Optional[Vector]:
    """Proyección ortogonal de x0 sobre el conjunto fijo común; sólo en escenarios de proyecciones en ℓ₂."""
    if s.expected is None or s.expected.oracle != "orthogonal_projection" or s.space.p != 2:
        return None
    return common_fixed_space(s.ops).project(x0)

"""
Configuración de ejecución y modos de la CLI.

Una ejecución se describe con un documento JSON (ver README):

    {"scenario": "example1", "schedule": {"scripted": [1]}, "x0": [0, 1], "mode": "run"}
"""

import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .conditions import (
    PreconditionError,
    adjoint_support_invariance,
    check_w_prime,
    semigroup_w_falsifier,
)
from .config import ExecutionFlags, ExitCodes, OutputConfig, StopDefaults
from .engine import ScheduleError, SchedulePolicy, StopCriteria, WordSchedule, audit_run
from .logger_config import obtener_logger
from .operators import (
    ContractionStatus,
    ContractViolationError,
    OperatorError,
    adjoint,
    common_fixed_space,
    is_contraction,
)
from .processor import (
    construir_resumen,
    crear_directorio_ejecucion,
    guardar_reporte_json,
    guardar_resumen_json,
    guardar_trace_csv,
)
from .scenarios import (
    SCENARIO_BUILDERS,
    Scenario,
    ScenarioFileError,
    UnknownScenarioError,
    build_scenario,
    catalog,
    example1_no_commuting_projection,
    load_scenario_file,
)
from .space import SpaceError, Vector, parse_scalar

logger = obtener_logger(__name__)

CLAVES_CONFIG = (
    "mode", "scenario", "params", "schedule", "x0", "stop", "stride",
    "output", "seed", "exact", "max_word_len", "budget",
)
CLAVES_STOP = ("max_iters", "cauchy_tol", "cauchy_window", "stagnation_tol")
CLAVES_SCHEDULE = ("policy", "script", "fallback", "transition", "seed")
FALLBACK_POR_DEFECTO = "round_robin"
SIN_FALLBACK = "none"

_PATRON_RANDOM = re.compile(r"^random\((\d+)\)$")


class ConfigError(Exception):
    """Configuración inválida: claves desconocidas, valores fuera de rango o dimensiones incompatibles."""
    pass


@dataclass(frozen=True)
class ScheduleSpec:
    """Descripción serializable de un WordSchedule; seed None usa la semilla de la configuración."""

    policy: str = SchedulePolicy.SEEDED_UNIFORM.value
    script: Tuple[int, ...] = ()
    fallback: Optional[str] = None
    transition: Optional[Tuple[Tuple[float, ...], ...]] = None
    seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        datos: Dict[str, Any] = {"policy": self.policy}
        if self.script:
            datos["script"] = list(self.script)
        if self.policy == SchedulePolicy.SCRIPTED.value:
            datos["fallback"] = self.fallback or SIN_FALLBACK
        if self.transition is not None:
            datos["transition"] = [list(fila) for fila in self.transition]
        if self.seed is not None:
            datos["seed"] = self.seed
        return datos


@dataclass(frozen=True)
class RunConfig:
    mode: str = ExecutionFlags.MODO_POR_DEFECTO
    scenario: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    x0: Union[None, str, Tuple[Any, ...]] = None
    stop: StopCriteria = field(default_factory=StopCriteria)
    stride: int = StopDefaults.SNAPSHOT_STRIDE
    output: Optional[str] = None
    seed: int = ExecutionFlags.SEED_POR_DEFECTO
    exact: Optional[bool] = None
    max_word_len: int = 3
    budget: int = 64


def _entero(valor: Any, nombre: str, minimo: int) -> int:
    if isinstance(valor, bool) or not isinstance(valor, int) or valor < minimo:
        raise ConfigError(f"'{nombre}' debe ser un entero >= {minimo}; obtenido {valor!r}")
    return valor


def _claves_desconocidas(datos: Dict[str, Any], permitidas: Tuple[str, ...], prefijo: str = "") -> None:
    desconocidas = sorted(set(datos) - set(permitidas))
    if desconocidas:
        raise ConfigError(f"Claves desconocidas: {', '.join(prefijo + k for k in desconocidas)}")


def _parsear_schedule(valor: Any) -> ScheduleSpec:
    """Acepta "round_robin", {"scripted": [1, 2]}, {"markov": [[...]]} o la forma canónica {"policy": ...}."""
    if valor is None:
        return ScheduleSpec()
    if isinstance(valor, str):
        valor = {"policy": valor}
    if not isinstance(valor, dict):
        raise ConfigError(f"'schedule' debe ser texto u objeto; obtenido {type(valor).__name__}")

    datos = dict(valor)
    atajos = [k for k in ("scripted", "markov") if k in datos]
    if atajos:
        if "policy" in datos or len(atajos) > 1:
            raise ConfigError("'schedule' admite una sola política")
        clave = atajos[0]
        datos["policy"] = clave
        datos["script" if clave == "scripted" else "transition"] = datos.pop(clave)
    for politica in ("seeded_uniform", "round_robin"):
        if politica in datos:
            if "policy" in datos:
                raise ConfigError("'schedule' admite una sola política")
            opciones = datos.pop(politica)
            datos["policy"] = politica
            if isinstance(opciones, dict):
                datos.update(opciones)

    _claves_desconocidas(datos, CLAVES_SCHEDULE, "schedule.")

    policy = datos.get("policy", SchedulePolicy.SEEDED_UNIFORM.value)
    try:
        policy = SchedulePolicy(policy).value
    except ValueError:
        raise ConfigError(f"Política desconocida '{policy}'; válidas: {', '.join(p.value for p in SchedulePolicy)}")

    script: Tuple[int, ...] = ()
    fallback: Optional[str] = None
    if policy == SchedulePolicy.SCRIPTED.value:
        crudo = datos.get("script")
        if not isinstance(crudo, list) or not crudo:
            raise ConfigError("scripted requiere una lista no vacía de índices")
        script = tuple(_entero(i, "schedule.script", 1) for i in crudo)
        fallback = datos.get("fallback", FALLBACK_POR_DEFECTO)
        if fallback == SIN_FALLBACK:
            fallback = None
        elif fallback not in (SchedulePolicy.ROUND_ROBIN.value, SchedulePolicy.SEEDED_UNIFORM.value):
            raise ConfigError(f"fallback debe ser round_robin, seeded_uniform o none; obtenido {fallback!r}")

    transition = None
    if policy == SchedulePolicy.MARKOV.value:
        crudo = datos.get("transition")
        if not isinstance(crudo, list) or not all(isinstance(fila, list) for fila in crudo):
            raise ConfigError("markov requiere una matriz de transición (lista de filas)")
        try:
            transition = tuple(tuple(float(parse_scalar(x)) for x in fila) for fila in crudo)
        except SpaceError as e:
            raise ConfigError(f"Matriz de transición inválida: {e}")

    seed = datos.get("seed")
    if seed is not None:
        seed = _entero(seed, "schedule.seed", 0)

    return ScheduleSpec(policy, script, fallback, transition, seed)


def _parsear_stop(valor: Any) -> StopCriteria:
    if valor is None:
        return StopCriteria()
    if not isinstance(valor, dict):
        raise ConfigError("'stop' debe ser un objeto")
    _claves_desconocidas(valor, CLAVES_STOP, "stop.")
    try:
        return StopCriteria(**valor)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Criterio de parada inválido: {e}")


def _parsear_x0(valor: Any) -> Union[None, str, Tuple[Any, ...]]:
    if valor is None:
        return None
    if isinstance(valor, str):
        if not _PATRON_RANDOM.match(valor.strip()):
            raise ConfigError(f"x0 debe ser una lista o 'random(seed)'; obtenido {valor!r}")
        return valor.strip()
    if not isinstance(valor, list) or not valor:
        raise ConfigError("x0 debe ser una lista no vacía de escalares")
    try:
        for x in valor:
            parse_scalar(x)
    except SpaceError as e:
        raise ConfigError(f"x0 inválido: {e}")
    return tuple(valor)


def cargar_escenario(config: RunConfig) -> Scenario:
    """Construye el escenario nombrado o lo carga desde archivo."""
    nombre = config.scenario
    if nombre is None:
        raise ConfigError("Falta 'scenario'")

    if nombre in SCENARIO_BUILDERS:
        parametros = dict(config.params)
        if config.exact is not None and nombre == "example1":
            parametros["exact"] = config.exact
        return build_scenario(nombre, **parametros)

    if Path(nombre).is_file():
        return load_scenario_file(nombre, exact=bool(config.exact))

    raise UnknownScenarioError(
        f"Escenario desconocido '{nombre}'; disponibles: {', '.join(SCENARIO_BUILDERS)} o una ruta a archivo JSON"
    )


def construir_calendario(spec: ScheduleSpec, n_generators: int, seed: int) -> WordSchedule:
    semilla = spec.seed if spec.seed is not None else seed
    policy = SchedulePolicy(spec.policy)
    if policy == SchedulePolicy.ROUND_ROBIN:
        return WordSchedule.round_robin(n_generators)
    if policy == SchedulePolicy.SEEDED_UNIFORM:
        return WordSchedule.seeded_uniform(n_generators, semilla)
    if policy == SchedulePolicy.MARKOV:
        if spec.transition is not None and len(spec.transition) != n_generators:
            raise ScheduleError(f"La matriz de transición debe ser {n_generators}x{n_generators}")
        return WordSchedule.markov(spec.transition, semilla)

    fallback = None
    if spec.fallback is not None:
        fallback = construir_calendario(ScheduleSpec(spec.fallback, seed=spec.seed), n_generators, seed)
    return WordSchedule.scripted(spec.script, n_generators, fallback)


def resolver_x0(config: RunConfig, escenario: Scenario) -> Vector:
    if config.x0 is None:
        return escenario.default_x0
    if isinstance(config.x0, str):
        semilla = int(_PATRON_RANDOM.match(config.x0).group(1))
        return Vector(np.random.default_rng(semilla).standard_normal(escenario.space.dim))
    exacto = all(T.exact for T in escenario.ops)
    return Vector.from_values(config.x0, exact=exacto)


def parse_config(text: str) -> RunConfig:
    """
    Valida un documento JSON de configuración y aplica los valores por defecto.

    Construye el escenario para comprobar x0 y el calendario contra la
    dimensión y el número de operadores.
    """
    try:
        datos = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido (línea {e.lineno}, columna {e.colno}): {e.msg}")
    if not isinstance(datos, dict):
        raise ConfigError("La configuración debe ser un objeto JSON")

    _claves_desconocidas(datos, CLAVES_CONFIG)

    modo = datos.get("mode", ExecutionFlags.MODO_POR_DEFECTO)
    try:
        ExecutionFlags.validar(modo)
    except ValueError as e:
        raise ConfigError(str(e))

    params = datos.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' debe ser un objeto")

    exacto = datos.get("exact")
    if exacto is not None and not isinstance(exacto, bool):
        raise ConfigError("'exact' debe ser booleano")

    salida = datos.get("output")
    if salida is not None and not isinstance(salida, str):
        raise ConfigError("'output' debe ser una ruta")

    scenario = datos.get("scenario")
    if scenario is not None and not isinstance(scenario, str):
        raise ConfigError("'scenario' debe ser un nombre o una ruta")

    config = RunConfig(
        mode=modo,
        scenario=scenario,
        params=params,
        schedule=_parsear_schedule(datos.get("schedule")),
        x0=_parsear_x0(datos.get("x0")),
        stop=_parsear_stop(datos.get("stop")),
        stride=_entero(datos.get("stride", StopDefaults.SNAPSHOT_STRIDE), "stride", 1),
        output=salida,
        seed=_entero(datos.get("seed", ExecutionFlags.SEED_POR_DEFECTO), "seed", 0),
        exact=exacto,
        max_word_len=_entero(datos.get("max_word_len", 3), "max_word_len", 1),
        budget=_entero(datos.get("budget", 64), "budget", 1),
    )

    if modo == "catalog":
        return config

    try:
        escenario = cargar_escenario(config)
        if isinstance(config.x0, tuple) and len(config.x0) != escenario.space.dim:
            raise ConfigError(
                f"x0 tiene dimensión {len(config.x0)} y el escenario '{escenario.name}' dimensión {escenario.space.dim}"
            )
        construir_calendario(config.schedule, len(escenario.ops), config.seed)
    except (UnknownScenarioError, ScenarioFileError, ScheduleError, SpaceError, OperatorError, ValueError) as e:
        raise ConfigError(str(e))

    return config


def serialize_config(config: RunConfig) -> str:
    """Forma canónica JSON; parse_config(serialize_config(c)) == c."""
    datos = {
        "mode": config.mode,
        "scenario": config.scenario,
        "params": config.params,
        "schedule": config.schedule.to_dict(),
        "x0": list(config.x0) if isinstance(config.x0, tuple) else config.x0,
        "stop": {
            "max_iters": config.stop.max_iters,
            "cauchy_tol": config.stop.cauchy_tol,
            "cauchy_window": config.stop.cauchy_window,
            "stagnation_tol": config.stop.stagnation_tol,
        },
        "stride": config.stride,
        "output": config.output,
        "seed": config.seed,
        "exact": config.exact,
        "max_word_len": config.max_word_len,
        "budget": config.budget,
    }
    return json.dumps(datos, indent=OutputConfig.INDENT_JSON, ensure_ascii=False)


def combinar_config(texto: Optional[str], overrides: Dict[str, Any]) -> RunConfig:
    """Superpone los flags de la línea de comandos sobre el documento JSON."""
    try:
        datos = json.loads(texto) if texto else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido (línea {e.lineno}, columna {e.colno}): {e.msg}")
    if not isinstance(datos, dict):
        raise ConfigError("La configuración debe ser un objeto JSON")
    datos.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(json.dumps(datos))


def _emitir(datos: Dict[str, Any], salida: Path, nombre_archivo: str) -> int:
    carpeta = crear_directorio_ejecucion(salida, ExecutionFlags.CREAR_CARPETA_EJECUCION)
    if carpeta is None or guardar_reporte_json(datos, carpeta, nombre_archivo) is None:
        return ExitCodes.VALIDATION_ERROR
    sys.stdout.write(json.dumps(datos, indent=OutputConfig.INDENT_JSON, ensure_ascii=False) + "\n")
    return ExitCodes.SUCCESS


def _reporte_check(escenario: Scenario) -> Dict[str, Any]:
    operadores: List[Dict[str, Any]] = []
    todas_contracciones = True

    for T in escenario.ops:
        contraccion = is_contraction(T)
        entrada: Dict[str, Any] = {
            "name": T.name,
            "norm_bracket": list(contraccion.bracket),
            "contraction": contraccion.status.value,
            "contraction_witness": None if contraccion.witness is None else [float(x) for x in contraccion.witness.tolist()],
            "w_prime": None,
            "adjoint_w_prime": None,
        }
        if contraccion.status == ContractionStatus.YES:
            entrada["w_prime"] = check_w_prime(T).to_dict()
            T_adj = adjoint(T)
            if is_contraction(T_adj).status == ContractionStatus.YES:
                entrada["adjoint_w_prime"] = check_w_prime(T_adj).to_dict()
        else:
            todas_contracciones = False
            logger.warning(f"{T.name or 'operador'} no es una contracción certificada ({contraccion.status.value})")
        operadores.append(entrada)

    invariancia: List[Dict[str, Any]] = []
    fijo = common_fixed_space(escenario.ops)
    if todas_contracciones:
        for k, y in enumerate(fijo.vectors()):
            for T in escenario.ops:
                try:
                    detalle = adjoint_support_invariance(T, y).to_dict()
                except PreconditionError as e:
                    detalle = {"error": str(e)}
                invariancia.append({"basis_vector": k, "operator": T.name, **detalle})

    return {
        "scenario": escenario.name,
        "space": escenario.space.label,
        "operators": operadores,
        "common_fixed_space_dim": fijo.dim_sub,
        "support_invariance": invariancia,
    }


def _ejecutar_run(config: RunConfig, escenario: Scenario, salida: Path) -> int:
    calendario = construir_calendario(config.schedule, len(escenario.ops), config.seed)
    x0 = resolver_x0(config, escenario)
    auditoria = audit_run(escenario.ops, calendario, x0, config.stop, config.stride)

    carpeta = crear_directorio_ejecucion(salida, ExecutionFlags.CREAR_CARPETA_EJECUCION)
    if carpeta is None or guardar_trace_csv(auditoria.trace, carpeta) is None:
        return ExitCodes.VALIDATION_ERROR

    resumen = construir_resumen(escenario.name, config.seed, auditoria)
    if guardar_resumen_json(resumen, carpeta) is None:
        return ExitCodes.VALIDATION_ERROR
    sys.stdout.write(json.dumps(resumen, indent=OutputConfig.INDENT_JSON, ensure_ascii=False) + "\n")

    if auditoria.violations:
        return ExitCodes.AUDIT_VIOLATION
    return ExitCodes.SUCCESS


def run_cli(config: RunConfig) -> int:
    """Ejecuta el modo de la configuración y devuelve el código de salida."""
    logger.info("=" * 80)
    logger.info(f"MODO: {config.mode.upper()}  ESCENARIO: {config.scenario or '-'}  SEMILLA: {config.seed}")
    logger.info("=" * 80)

    salida = Path(config.output) if config.output else OutputConfig.OUTPUT_DIR

    try:
        if config.mode == "catalog":
            return _emitir({"scenarios": [s.to_dict() for s in catalog()]}, salida, "catalog.json")

        escenario = cargar_escenario(config)

        if config.mode == "certificate":
            certificado = example1_no_commuting_projection(escenario.ops)
            return _emitir({"scenario": escenario.name, **certificado.to_dict()}, salida, "certificate.json")

        if config.mode == "check":
            return _emitir(_reporte_check(escenario), salida, "check.json")

        if config.mode == "falsify":
            reporte = semigroup_w_falsifier(escenario.ops, config.max_word_len, config.budget, config.seed)
            return _emitir({"scenario": escenario.name, **reporte.to_dict()}, salida, "falsify.json")

        return _ejecutar_run(config, escenario, salida)

    except ContractViolationError as e:
        logger.error(f"Precondición incumplida: {e}")
        return ExitCodes.VALIDATION_ERROR
    except (ConfigError, UnknownScenarioError, ScenarioFileError, ScheduleError, SpaceError, OperatorError, PreconditionError, ValueError) as e:
        logger.error(f"Error de validación: {e}")
        return ExitCodes.VALIDATION_ERROR
    except OSError as e:
        logger.error(f"Error de E/S: {e}")
        return ExitCodes.VALIDATION_ERROR

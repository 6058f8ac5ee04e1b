"""
Generación de archivos de salida: trazas CSV, resúmenes y reportes JSON.
"""

import csv
import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from .config import OutputConfig
from .engine import AuditReport, Trace
from .logger_config import obtener_logger

logger = obtener_logger(__name__)

INDENT_JSON = OutputConfig.INDENT_JSON


def crear_directorio_ejecucion(base: Path, crear_carpeta: bool = False) -> Optional[Path]:
    """Crea el directorio de salida; con crear_carpeta agrega una subcarpeta con timestamp."""
    carpeta = Path(base)
    if crear_carpeta:
        timestamp = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
        carpeta = carpeta / f"ejecucion_{timestamp}"

    try:
        carpeta.mkdir(parents=True, exist_ok=True)
        logger.info(f"Directorio de salida: {carpeta}")
        return carpeta
    except OSError as e:
        logger.error(f"Error creando carpeta {carpeta}: {e}")
        return None


def _a_float(valor: Any) -> float:
    return float(valor)


def guardar_trace_csv(trace: Trace, carpeta: Path) -> Optional[Path]:
    """Escribe trace.csv con columnas n, r_n, norm, increment."""
    archivo = carpeta / OutputConfig.TRACE_FILE
    try:
        with open(archivo, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(OutputConfig.TRACE_COLUMNS)
            for paso in trace.steps:
                writer.writerow([paso.n, paso.r_n, _a_float(paso.norm), _a_float(paso.increment)])
        logger.info(f"Traza guardada ({trace.iters} pasos): {archivo}")
        return archivo
    except (IOError, OSError) as e:
        logger.error(f"Error guardando traza: {e}")
        return None


def construir_resumen(scenario: str, seed: int, audit: AuditReport) -> Dict[str, Any]:
    """Resumen de una ejecución con las claves en el orden de OutputConfig.SUMMARY_KEYS."""
    traza = audit.trace
    limite = traza.limit_estimate
    return {
        "scenario": scenario,
        "seed": seed,
        "stop_reason": traza.stop_reason.value,
        "iters": traza.iters,
        "limit": None if limite is None else [_a_float(x) for x in limite.tolist()],
        "monotonicity_max_violation": audit.monotonicity_max_violation,
        "limit_in_fixed_set": audit.classification.in_common_fixed_set,
        "distance_to_fixed_set": audit.classification.distance,
    }


def validar_resumen(resumen: Dict[str, Any]) -> bool:
    """Valida que el resumen tenga exactamente las claves esperadas y en orden."""
    if not isinstance(resumen, dict):
        logger.error(f"El resumen debe ser diccionario, obtenido: {type(resumen).__name__}")
        return False

    claves = tuple(resumen.keys())
    if claves != OutputConfig.SUMMARY_KEYS:
        logger.error(f"Claves de resumen inválidas: {claves}")
        return False
    return True


def guardar_reporte_json(datos: Dict[str, Any], carpeta: Path, nombre_archivo: str) -> Optional[Path]:
    """Guarda un reporte JSON con indentación fija (sin timestamps, reproducible)."""
    archivo = carpeta / nombre_archivo
    try:
        with open(archivo, "w", encoding="utf-8") as f:
            json.dump(datos, f, indent=INDENT_JSON, ensure_ascii=False)
            f.write("\n")
        logger.info(f"Reporte JSON guardado: {archivo}")
        return archivo
    except (IOError, OSError, TypeError, ValueError) as e:
        logger.error(f"Error al guardar reporte JSON {nombre_archivo}: {e}")
        return None


def guardar_resumen_json(resumen: Dict[str, Any], carpeta: Path) -> Optional[Path]:
    """Valida y guarda summary.json."""
    if not validar_resumen(resumen):
        return None
    return guardar_reporte_json(resumen, carpeta, OutputConfig.SUMMARY_FILE)

"""
Configuración centralizada del proyecto.
Carga variables desde .env y define tolerancias, criterios de parada,
parámetros de búsqueda y comportamientos de salida.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

PROJECT_ROOT = Path(__file__).parent.parent
REPORTS_BASE_DIR = PROJECT_ROOT / "reports"
LOGS_BASE_DIR = PROJECT_ROOT / "logs"


class ExecutionFlags:
    """Controla el modo de ejecución de la CLI."""

    MODOS_VALIDOS: tuple = ("run", "check", "falsify", "catalog", "certificate")
    MODO_POR_DEFECTO: str = "run"
    CREAR_CARPETA_EJECUCION: bool = False
    SEED_POR_DEFECTO: int = 0

    @staticmethod
    def validar(modo: str) -> None:
        if modo not in ExecutionFlags.MODOS_VALIDOS:
            raise ValueError(
                f"mode debe ser uno de {', '.join(ExecutionFlags.MODOS_VALIDOS)}; obtenido '{modo}'"
            )


class StopDefaults:
    """Criterios de parada por defecto del motor de iteración."""

    MAX_ITERS: int = 100_000
    CAUCHY_TOL: float = 1e-10
    CAUCHY_WINDOW: int = 50
    STAGNATION_TOL: float = 1e-13
    # Caída de norma máxima, relativa a Σ incremento² / (2‖x‖), para declarar ciclo isométrico
    STAGNATION_DROP_RATIO: float = 1e-3
    SNAPSHOT_STRIDE: int = 100


class ToleranceConfig:
    """Tolerancias numéricas compartidas por los módulos."""

    KERNEL_TOL: float = 1e-10
    CONTRACTION_TOL: float = 1e-12
    W_PRIME_TOL: float = 1e-10
    # Piso de desplazamiento para testigos de la búsqueda numérica
    MIN_WITNESS_GAP: float = 1e-4
    WITNESS_NORM_TOL: float = 1e-13
    FACE_TOL: float = 1e-12
    CLASSIFY_TOL: float = 1e-8
    MONOTONICITY_TOL: float = 1e-12
    PAIRING_TOL: float = 1e-10


class SearchConfig:
    """Parámetros de las búsquedas multi-arranque."""

    NORM_STARTS: int = 20
    NORM_SEED: int = 20_240_601
    POWER_MAX_ITERS: int = 500
    POLISH_MAX_ITERS: int = 20_000
    DELTA_SCHEDULE: tuple = (1e-2, 1e-4, 1e-6)
    RESTARTS_PER_DELTA: int = 20
    SLSQP_MAX_ITERS: int = 200
    SIGN_ENUMERATION_MAX_DIM: int = 14
    FALSIFIER_STARTS_PER_WORD: int = 8
    FALSIFIER_GAP_THRESHOLD: float = 1e-6
    FALSIFIER_DISPLACEMENT_THRESHOLD: float = 0.1
    MAX_FACE_VERTICES: int = 4096


class BatchConfig:
    """Paralelismo de experimentos por lotes."""

    MAX_WORKERS: int = int(os.getenv("PRODUCTS_MAX_WORKERS", "4"))


class OutputConfig:
    """Rutas y formatos de los archivos generados."""

    OUTPUT_DIR: Path = Path(os.getenv("PRODUCTS_OUTPUT_DIR", str(REPORTS_BASE_DIR)))
    TRACE_FILE: str = "trace.csv"
    SUMMARY_FILE: str = "summary.json"
    TRACE_COLUMNS: tuple = ("n", "r_n", "norm", "increment")
    SUMMARY_KEYS: tuple = (
        "scenario",
        "seed",
        "stop_reason",
        "iters",
        "limit",
        "monotonicity_max_violation",
        "limit_in_fixed_set",
        "distance_to_fixed_set",
    )
    INDENT_JSON: int = 2


class LoggingConfig:
    """Configuración para el sistema de logging."""

    LOG_LEVEL: str = os.getenv("PRODUCTS_LOG_LEVEL", "INFO").upper()
    LOG_FILE: Path = LOGS_BASE_DIR / "random_products.log"
    LOG_FORMAT: str = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
    DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"


class ExitCodes:
    """Códigos de salida estándar de la CLI."""

    SUCCESS: int = 0
    VALIDATION_ERROR: int = 1
    AUDIT_VIOLATION: int = 2
    EXECUTION_ERROR: int = 3

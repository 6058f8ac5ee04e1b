"""
Orquestador principal: subcomandos run, check, falsify, catalog y certificate.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .cli import ConfigError, combinar_config, run_cli
from .config import ExecutionFlags, ExitCodes
from .logger_config import obtener_logger

logger = obtener_logger(__name__)


def crear_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="random_products",
        description="Productos aleatorios de contracciones en espacios ℓ_p de dimensión finita",
    )
    subparsers = parser.add_subparsers(dest="mode", required=True)

    for modo in ExecutionFlags.MODOS_VALIDOS:
        sub = subparsers.add_parser(modo)
        sub.add_argument("--config", help="Ruta a la configuración JSON ('-' para stdin)")
        sub.add_argument("--scenario", help="Escenario incorporado o ruta a archivo de escenario")
        sub.add_argument("--output", help="Directorio de salida")
        sub.add_argument("--seed", type=int, help="Semilla de la ejecución")
        sub.add_argument("--exact", action="store_true", default=None, help="Aritmética racional exacta")

    return parser


def leer_config(ruta: Optional[str]) -> Optional[str]:
    if ruta is None:
        return None
    if ruta == "-":
        return sys.stdin.read()
    with open(Path(ruta), "r", encoding="utf-8") as f:
        return f.read()


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal del script."""
    args = crear_parser().parse_args(argv)

    logger.info("=" * 80)
    logger.info("PRODUCTOS ALEATORIOS DE CONTRACCIONES")
    logger.info("=" * 80)

    try:
        texto = leer_config(args.config)
    except OSError as e:
        logger.error(f"No se pudo leer la configuración: {e}")
        return ExitCodes.VALIDATION_ERROR

    try:
        config = combinar_config(texto, {
            "mode": args.mode,
            "scenario": args.scenario,
            "output": args.output,
            "seed": args.seed,
            "exact": args.exact,
        })
    except ConfigError as e:
        logger.error(f"Error de configuración: {e}")
        return ExitCodes.VALIDATION_ERROR

    exit_code = run_cli(config)

    logger.info("=" * 80)
    logger.info(f"EJECUCIÓN FINALIZADA (código {exit_code})")
    logger.info("=" * 80)

    return exit_code


if __name__ == "__main__":
    try:
        exit_code = main()
        sys.exit(exit_code)
    except KeyboardInterrupt:
        logger.warning("\nEjecución cancelada por el usuario")
        sys.exit(ExitCodes.EXECUTION_ERROR)
    except Exception as e:
        logger.exception(f"Error crítico: {e}")
        sys.exit(ExitCodes.EXECUTION_ERROR)

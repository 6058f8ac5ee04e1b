#!/usr/bin/env python3
"""
Entry Point Principal de la CLI de productos aleatorios.
Uso: python run.py run --scenario example1 --exact
"""

import sys
from pathlib import Path

root_path = Path(__file__).parent
sys.path.insert(0, str(root_path))

from src.config import ExitCodes
from src.main import main

if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        sys.exit(ExitCodes.EXECUTION_ERROR)
    except Exception:
        sys.exit(ExitCodes.EXECUTION_ERROR)

"""
Pytest configuration and fixtures for tests.
"""

import pytest
from pathlib import Path
import json
import tempfile

import numpy as np


@pytest.fixture
def temp_dir():
    """Provides a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    """Seeded numpy generator."""
    return np.random.default_rng(12345)


@pytest.fixture
def example1_exact():
    """Example 1 operators (T1, T2) on l1^2 with rational entries."""
    from src.scenarios import example1
    return example1(exact=True)


@pytest.fixture
def example1_float():
    """Example 1 operators in float64."""
    from src.scenarios import example1
    return example1(exact=False)


@pytest.fixture
def catalog_scenarios():
    """Built-in scenarios with default parameters."""
    from src.scenarios import catalog
    return catalog()


@pytest.fixture
def sample_operator_file(temp_dir):
    """Creates a scenario file with rational entries."""
    datos = {
        "name": "archivo_ejemplo",
        "p": 1,
        "operators": [
            [[1, "1/2"], [0, 0]],
            [[1, "1/3"], [0, 0]],
        ],
        "x0": [0, 1],
    }
    archivo = temp_dir / "escenario.json"
    with open(archivo, "w", encoding="utf-8") as f:
        json.dump(datos, f)
    return archivo


@pytest.fixture
def doubling_operator_file(temp_dir):
    """Creates a scenario file with 2 x identity (not a contraction)."""
    datos = {"name": "doble", "p": 2, "operators": [[[2, 0], [0, 2]]], "x0": [1, 1]}
    archivo = temp_dir / "doble.json"
    with open(archivo, "w", encoding="utf-8") as f:
        json.dump(datos, f)
    return archivo

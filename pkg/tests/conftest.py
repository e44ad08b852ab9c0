"""
Shared fixtures for the lambda-forge test suite.
"""

import random
import sys
from pathlib import Path
from unittest.mock import AsyncMock

import pytest

# Add src to path for testing
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from fastmcp import Context

from lambda_forge.constructions import cur, fermion_charged, fermion_neutral, virasoro
from lambda_forge.liealg import sl2, sl2_grading, sl3
from lambda_forge.wick import WickEngine

SAMPLES = Path(__file__).parent.parent / "samples"


@pytest.fixture
def samples_dir():
    """Directory with the shipped sample spec files."""
    return SAMPLES


@pytest.fixture
def rng():
    """Seeded random source for randomized identity instances."""
    return random.Random(20240229)


@pytest.fixture(scope="session")
def sl2_data():
    """sl2 with basis e, h, f."""
    return sl2()


@pytest.fixture(scope="session")
def sl3_data():
    """sl3 in matrix units."""
    return sl3()


@pytest.fixture(scope="session")
def sl2_principal(sl2_data):
    """Dynkin grading of sl2 with f = f."""
    return sl2_grading(sl2_data)


@pytest.fixture
def virasoro_spec():
    """Virasoro with formal central charge c."""
    return virasoro()


@pytest.fixture
def virasoro_engine(virasoro_spec):
    """Wick engine over the Virasoro spec."""
    return WickEngine(virasoro_spec)


@pytest.fixture
def sl2_currents(sl2_data):
    """Cur_k sl2 with formal level k."""
    return cur(sl2_data)


@pytest.fixture
def sl2_engine(sl2_currents):
    """Wick engine over Cur_k sl2."""
    return WickEngine(sl2_currents)


@pytest.fixture
def charged_pair():
    """One odd charged fermion pair of weights (0, 1)."""
    return fermion_charged([("phi", "phistar")])


@pytest.fixture
def neutral_pair():
    """Two odd neutral fermions with <psi|psibar> = 1."""
    return fermion_neutral(["psi", "psibar"], {("psi", "psibar"): 1})


@pytest.fixture
def mock_context():
    """Create a mock MCP context for testing."""
    context = AsyncMock(spec=Context)
    context.info = AsyncMock()
    context.debug = AsyncMock()
    context.error = AsyncMock()
    return context

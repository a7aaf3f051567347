"""
Pytest configuration and shared fixtures for the spectral hierarchy tests.
"""

import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Add src directory to Python path for imports
src_path = Path(__file__).parent.parent / 'src'
sys.path.insert(0, str(src_path))

from config.schema import JobConfig  # noqa: E402
from spectral.hierarchy import HierarchySpec  # noqa: E402

# Rational asymmetries used by the closed-form tests.
ALPHAS = [
    Fraction(0),
    Fraction(1, 4),
    Fraction(-1, 4),
    Fraction(1, 3),
    Fraction(-1, 3),
    Fraction(1, 5),
    Fraction(-2, 5),
    Fraction(3, 7),
]


@pytest.fixture
def config(monkeypatch, tmp_path):
    """A default JobConfig that ignores the repository config file."""
    monkeypatch.setenv('CONFIG_PATH', str(tmp_path / 'missing.yaml'))
    return JobConfig()


@pytest.fixture
def harmonic() -> HierarchySpec:
    """Period 1 with gap 2, so W(u) = u and V_1 = u^2 - 1."""
    return HierarchySpec((2,))


@pytest.fixture
def pair() -> HierarchySpec:
    """Period 2 with gaps 1, 2 (alpha = 1/6)."""
    return HierarchySpec((1, 2))


@pytest.fixture
def quarter() -> HierarchySpec:
    """Period 2 with gaps 1, 3 (alpha = 1/4, c = 1)."""
    return HierarchySpec((1, 3))

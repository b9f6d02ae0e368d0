"""Pytest configuration and shared fixtures."""

import os

import pytest

from lab.cubes import build_tree
from lab.spaces import CantorSpace, ProductSpace, SymbolicSpace, TorusSpace

# Ensure logs directory exists as a fallback
_root_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
_logs_dir = os.path.join(_root_dir, 'logs')
try:
    os.makedirs(_logs_dir, exist_ok=True)
except (OSError, PermissionError):
    pass


@pytest.fixture(autouse=True)
def _single_thread(monkeypatch):
    """Deterministic single-worker runs unless a test asks otherwise."""
    monkeypatch.setenv('LIMSUP_LAB_THREADS', '1')
    monkeypatch.setenv('LIMSUP_LAB_ENV', 'testing')


@pytest.fixture
def torus1():
    return TorusSpace(1)


@pytest.fixture
def torus2():
    return TorusSpace(2)


@pytest.fixture
def symbolic2():
    return SymbolicSpace(2, 0.5)


@pytest.fixture
def cantor():
    return CantorSpace()


@pytest.fixture
def torus_square():
    return ProductSpace((TorusSpace(1), TorusSpace(1)))


@pytest.fixture
def torus_tree(torus1):
    return build_tree(torus1, 0.5, max_level=12)


@pytest.fixture
def symbolic_tree(symbolic2):
    return build_tree(symbolic2, 0.5, max_level=12)


@pytest.fixture
def results_dir(tmp_path):
    out = tmp_path / 'results'
    out.mkdir()
    return out

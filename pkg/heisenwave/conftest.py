"""Shared small grids; every transform on them finishes in well under a second."""
import pytest

from heisenwave.group_fourier import build_spectral_grid
from heisenwave.models import ModelParams, PhysicalGrid


@pytest.fixture
def params():
    return ModelParams(n=1, b=2.0, m=0.0, alpha=1.0)


@pytest.fixture
def massive_params():
    return ModelParams(n=1, b=2.0, m=0.5, alpha=1.0)


@pytest.fixture
def small_sgrid():
    return build_spectral_grid(1, 4, lambda_min=0.05, lambda_max=8.0, node_count=8)


@pytest.fixture
def small_pgrid():
    return PhysicalGrid((5.0, 5.0, 6.0), (20, 20, 20))


@pytest.fixture
def tiny_sgrid():
    return build_spectral_grid(1, 2, lambda_min=0.1, lambda_max=6.0, node_count=8)


@pytest.fixture
def tiny_pgrid():
    return PhysicalGrid((4.0, 4.0, 4.0), (9, 9, 9))

import numpy as np
import pytest

from app.services.polynomial import MultiPoly


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240517)


@pytest.fixture
def varopoulos():
    """z1^2 + z2^2 + z3^2 - 2 z1 z2 - 2 z1 z3 - 2 z2 z3."""
    return MultiPoly(3, {
        (2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1,
        (1, 1, 0): -2, (1, 0, 1): -2, (0, 1, 1): -2,
    })


def torus_points(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random((count, dim)))

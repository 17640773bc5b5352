import numpy as np
import pytest

from wpneck.cylinder import CylinderMetric
from wpneck.grids import chebyshev_grid, periodic_grid, uniform_grid


@pytest.fixture(scope="session")
def cyl_half():
    return CylinderMetric(0.5)


@pytest.fixture(scope="session")
def grid_1025():
    return uniform_grid(-1.0, 1.0, 1025)


@pytest.fixture(scope="session")
def grid_2049():
    return uniform_grid(-1.0, 1.0, 2049)


@pytest.fixture(scope="session")
def cheb_96():
    return chebyshev_grid(-1.0, 1.0, 96)


@pytest.fixture(scope="session")
def surface_grid():
    return periodic_grid(-2.0, 2.0, 2048)


def smooth_bump(a: float, b: float):
    """C^infinity bump supported on (a, b), unit sup norm."""

    def f(x):
        x = np.asarray(x, float)
        y = np.zeros_like(x)
        inside = (x > a) & (x < b)
        z = (x[inside] - a) / (b - a)
        y[inside] = np.exp(4.0) * np.exp(-1.0 / np.maximum(z * (1.0 - z), 1e-300))
        return y

    return f

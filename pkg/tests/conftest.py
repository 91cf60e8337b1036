import numpy as np
import pytest

from gpe2.grid import FieldPair, Grid, gaussian
from gpe2.ground_state import minimize_real
from gpe2.model import MassConstraint, ModelParams

# symmetric coupled set: equal chemical potentials, so the real minimizer is a standing wave
SYMMETRIC = ModelParams(gamma=1.0, delta=0.0, lam=-0.5, beta11=1.0, beta12=0.5, beta22=1.0, dim=2)
ATTRACTIVE = ModelParams(gamma=1.0, delta=0.1, lam=-0.5, beta11=-1.0, beta12=-1.0, beta22=-1.0, dim=2)
UNIQUE = ModelParams(gamma=1.0, delta=0.1, lam=-0.5, beta11=1.0, beta12=0.5, beta22=0.8, dim=2)
UNIT = MassConstraint(1.0, 1.0)


@pytest.fixture(scope="session")
def grid64():
    return Grid(2, 8.0, 64)


@pytest.fixture(scope="session")
def phi(grid64):
    return gaussian(grid64)


@pytest.fixture(scope="session")
def symmetric_ground_state(grid64):
    res = minimize_real(SYMMETRIC, UNIT, grid64)
    assert res.converged
    return res


@pytest.fixture(scope="session")
def unique_ground_state(grid64):
    res = minimize_real(UNIQUE, UNIT, grid64)
    assert res.converged
    return res


def random_smooth(grid, rng, complex_=False, bumps=3):
    """Sum of random Gaussian bumps; nonnegative unless complex."""
    out = np.zeros(grid.shape, dtype=complex if complex_ else float)
    for _ in range(bumps):
        c = rng.uniform(-2, 2, grid.dim)
        w = rng.uniform(0.6, 1.6)
        d2 = sum((x - x0) ** 2 for x, x0 in zip(grid.coords, c))
        amp = rng.uniform(0.2, 1.0)
        if complex_:
            k = rng.normal(size=grid.dim)
            amp = amp * np.exp(1j * (rng.uniform(0, 2 * np.pi) + sum(ki * x for ki, x in zip(k, grid.coords))))
        out = out + amp * np.exp(-0.5 * d2 / w**2)
    return out


def normalized(grid, u, c):
    return u * (c / np.sqrt(grid.mass(u))) if c > 0 else np.zeros_like(u)


def random_pair(grid, rng, masses, complex_=False):
    u1 = normalized(grid, random_smooth(grid, rng, complex_), masses.c1)
    u2 = normalized(grid, random_smooth(grid, rng, complex_), masses.c2)
    return FieldPair(grid, u1, u2)

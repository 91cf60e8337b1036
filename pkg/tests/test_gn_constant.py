import math

import numpy as np
import pytest

from gpe2.functionals import inequality_gaps
from gpe2.gn_constant import (
    ConvergenceError,
    gn_constant_quotient,
    gn_constant_shooting,
    gn_quotient,
    quotient_ascent_step,
    townes_mass_to_cb,
    townes_soliton,
)
from gpe2.grid import FieldPair, Grid
from gpe2.model import MassConstraint, ModelParams

# independent high-accuracy shooting run (step 5e-4, tol 1e-13), frozen
Q0 = 2.206200864695937
TOWNES_MASS = 11.700896524458878


@pytest.fixture(scope="module")
def townes():
    return townes_soliton(1e-10)


@pytest.fixture(scope="module")
def quotient_result():
    return gn_constant_quotient(Grid(2, 12.0, 256), return_field=True)


def test_townes_profile(townes):
    assert abs(townes.q0 - Q0) < 5e-4
    assert abs(townes.q0 - Q0) < 1e-9
    assert abs(townes.mass - TOWNES_MASS) < 1e-8
    assert abs(townes.cb - 5.8504) / 5.8504 < 1e-3
    assert np.all(np.diff(townes.q) < 0)
    assert townes.q[-1] < 1e-6


def test_normalization_conversion():
    assert townes_mass_to_cb(TOWNES_MASS) == TOWNES_MASS / 2


def test_tolerance_and_bracket_errors():
    with pytest.raises(ValueError):
        townes_soliton(1e-2)
    with pytest.raises(ValueError):
        townes_soliton(0.0)
    with pytest.raises(ConvergenceError) as info:
        townes_soliton(1e-6, bracket=(2.5, 3.0))
    assert info.value.best == (2.5, 3.0)


def test_gaussian_quotient_below_sharp(townes):
    g = Grid(2, 8.0, 64)
    j = gn_quotient(g, np.exp(-0.5 * g.r2))
    assert abs(j - 1 / (2 * math.pi)) < 1e-12
    assert j < 1 / townes.cb


def test_quotient_scale_invariant():
    g = Grid(2, 12.0, 256)
    x, y = g.coords
    u = np.exp(-0.5 * (x**2 + 2 * y**2)) * (1 + 0.3 * x)
    u2 = np.exp(-0.5 * 4 * (x**2 + 2 * y**2)) * (1 + 0.6 * x)
    assert abs(gn_quotient(g, u) - gn_quotient(g, u2)) < 1e-10


def test_one_step_improves_gaussian():
    g = Grid(2, 12.0, 128)
    u = np.exp(-0.5 * g.r2)
    u /= math.sqrt(g.mass(u))
    assert gn_quotient(g, quotient_ascent_step(g, u)) > gn_quotient(g, u)


def test_two_methods_agree(townes, quotient_result):
    res, _ = quotient_result
    assert res.method == "quotient_ascent"
    assert abs(res.value - townes.cb) / townes.cb < 1e-3
    s = gn_constant_shooting(1e-10)
    assert s.value == townes.cb and s.townes_mass == townes.mass


def test_optimizer_saturates_gn(quotient_result):
    res, u = quotient_result
    g = Grid(2, 12.0, 256)
    gaps = inequality_gaps(FieldPair(g, u, u), ModelParams(), MassConstraint(1.0, 1.0), res.value)
    assert abs(gaps["gn1"]) < 1e-5 * float(np.sum(u**4)) * g.cell_volume


def test_quotient_nonconvergence_carries_best():
    with pytest.raises(ConvergenceError) as info:
        gn_constant_quotient(Grid(2, 12.0, 64), iters=2)
    assert info.value.best > 5.8
    with pytest.raises(ValueError):
        gn_constant_quotient(Grid(1, 12.0, 64))

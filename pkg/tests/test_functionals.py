import math

import numpy as np
import pytest

from gpe2.functionals import (
    chemical_potentials,
    diamagnetic_gap,
    el_gradient,
    el_residual,
    energy_E0,
    energy_hat,
    energy_tilde,
    inequality_gaps,
)
from gpe2.grid import FieldPair, Grid, gaussian
from gpe2.model import MassConstraint, ModelParams

from conftest import random_pair

CB = 5.850448262230671  # shooting value, frozen


@pytest.fixture(scope="module")
def g():
    return Grid(2, 8.0, 64)


def single(g, u):
    return FieldPair(g, u, np.zeros_like(u))


def test_e0_examples(g):
    phi = gaussian(g)
    assert abs(energy_E0(single(g, phi), ModelParams()).total - 1.0) < 1e-8
    assert abs(energy_E0(single(g, phi), ModelParams(delta=0.7)).total - 1.7) < 1e-8
    e = energy_E0(single(g, phi), ModelParams(beta11=2.0))
    assert abs(e.self1 - 1 / (2 * math.pi)) < 1e-7
    assert abs(e.total - (1 + 1 / (2 * math.pi))) < 1e-7
    assert e.coupling == 0.0


def test_breakdown_total_is_sum(g):
    pair = random_pair(g, np.random.default_rng(0), MassConstraint(1.0, 0.5), complex_=True)
    e = energy_hat(pair, ModelParams(delta=0.2, lam=0.3, beta11=1, beta12=-0.4, beta22=2))
    parts = [e.kinetic, e.trap, e.detuning, e.self1, e.self2, e.cross, e.coupling]
    assert abs(e.total - sum(parts)) <= 1e-12 * sum(abs(x) for x in parts)
    assert e.to_dict()["total"] == e.total


def test_hat_coupling_examples(g):
    phi = gaussian(g)
    assert abs(energy_hat(FieldPair(g, phi, phi), ModelParams(lam=-0.5)).coupling + 1) < 1e-12
    assert abs(energy_hat(FieldPair(g, phi, -phi), ModelParams(lam=0.5)).coupling + 1) < 1e-12
    assert abs(energy_hat(FieldPair(g, phi, 1j * phi), ModelParams(lam=0.8)).coupling) < 1e-15


def test_tilde_examples(g):
    phi = gaussian(g)
    pair = FieldPair(g, phi, phi)
    a = energy_tilde(pair, ModelParams(lam=-0.5, beta11=1))
    b = energy_hat(pair, ModelParams(lam=-0.5, beta11=1))
    assert abs(a.total - b.total) < 1e-12
    p = ModelParams(lam=0.5)
    assert abs(energy_tilde(pair, p).total - (energy_hat(pair, p).total - 2)) < 1e-12
    q = ModelParams(beta11=1, beta12=0.3)
    z = random_pair(g, np.random.default_rng(1), MassConstraint(1, 1), complex_=True)
    assert energy_E0(z, q).total == pytest.approx(energy_hat(z, q).total, abs=1e-14)


def test_grid_mismatch_rejected(g):
    phi = gaussian(g)
    with pytest.raises(ValueError):
        energy_E0(single(g, phi), ModelParams(dim=3))


def test_el_gradient_examples(g):
    phi = gaussian(g)
    out = el_gradient(single(g, phi), ModelParams())
    assert np.max(np.abs(out.u1 - phi)) < 1e-7
    zero = el_gradient(single(g, np.zeros(g.shape)), ModelParams(beta11=1))
    assert not np.any(zero.u1) and not np.any(zero.u2)
    out = el_gradient(single(g, phi), ModelParams(lam=0.3))
    assert np.max(np.abs(out.u2 - 0.3 * phi)) < 1e-15


def test_chemical_potential_examples(g):
    phi = gaussian(g)
    m = MassConstraint(1.0, 0.0)
    mu = chemical_potentials(single(g, phi), ModelParams(), m)
    assert abs(mu[0] - 1) < 1e-8 and math.isnan(mu[1])
    assert abs(chemical_potentials(single(g, phi), ModelParams(delta=0.2), m)[0] - 1.2) < 1e-8
    g2 = Grid(2, 4.0, 64)
    mu = chemical_potentials(single(g2, gaussian(g2, 2.0)), ModelParams(gamma=2.0), m)
    assert abs(mu[0] - 2) < 1e-8
    assert el_residual(single(g, phi), ModelParams(), mu=(1.0, math.nan)) < 1e-7


def test_el_gradient_is_half_the_derivative(g):
    rng = np.random.default_rng(5)
    p = ModelParams(delta=0.3, lam=-0.4, beta11=1.2, beta12=-0.7, beta22=0.5)
    z = random_pair(g, rng, MassConstraint(1, 1), complex_=True)
    d = random_pair(g, rng, MassConstraint(1, 1), complex_=True)
    grad = el_gradient(z, p)
    exact = 2 * sum(float(g.inner(a, b).real) for a, b in zip(grad, d))
    errs = []
    for h in (1e-3, 5e-4):
        plus = FieldPair(g, z.u1 + h * d.u1, z.u2 + h * d.u2)
        minus = FieldPair(g, z.u1 - h * d.u1, z.u2 - h * d.u2)
        errs.append(abs((energy_hat(plus, p).total - energy_hat(minus, p).total) / (2 * h) - exact))
    assert errs[1] < 1e-6
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_gauge_identity(g):
    rng = np.random.default_rng(2)
    p = ModelParams(lam=-0.6, beta11=1, beta12=0.2, beta22=1)
    w = random_pair(g, rng, MassConstraint(1.0, 0.7))
    base = energy_E0(w, p).total
    overlap = float(np.sum(w.u1 * w.u2)) * g.cell_volume
    for t1, t2 in [(0.0, 0.0), (0.4, 1.9), (2.0, 2.0), (5.0, 1.0)]:
        z = FieldPair(g, np.exp(1j * t1) * w.u1, np.exp(1j * t2) * w.u2)
        e = energy_hat(z, p).total
        assert abs(e - (base + 2 * p.lam * math.cos(t1 - t2) * overlap)) < 1e-12
    same = FieldPair(g, np.exp(0.7j) * w.u1, np.exp(0.7j) * w.u2)
    assert abs(energy_hat(same, p).total - energy_tilde(w, p).total) < 1e-12


def test_modulus_energy_below_phase_energy(g):
    rng = np.random.default_rng(3)
    p = ModelParams(lam=0.45, delta=0.1, beta11=-1, beta12=0.3, beta22=1)
    for _ in range(30):
        z = random_pair(g, rng, MassConstraint(1.0, 1.0), complex_=True)
        assert energy_tilde(z, p).total <= energy_hat(z, p).total + 1e-10


def test_inequality_gap_examples(g):
    phi = gaussian(g)
    pair = FieldPair(g, phi, phi)
    gaps = inequality_gaps(pair, ModelParams(), MassConstraint(1, 1), CB)
    assert abs(gaps["gn1"] - (1 / CB - 1 / (2 * math.pi))) < 1e-6
    assert abs(gaps["cs"]) < 1e-15
    assert gaps["coup"] == 0.0


def test_inequality_gaps_errors(g):
    phi = gaussian(g)
    with pytest.raises(ValueError):
        inequality_gaps(FieldPair(g, phi, 2 * phi), ModelParams(), MassConstraint(1, 1), CB)
    with pytest.raises(ValueError):
        inequality_gaps(FieldPair(g, -phi, phi), ModelParams(), MassConstraint(1, 1), CB)
    with pytest.raises(ValueError):
        inequality_gaps(FieldPair(Grid(1, 8.0, 64), np.ones(64), np.ones(64)), ModelParams(dim=1),
                        MassConstraint(1, 1), CB)


def test_diamagnetic_examples(g):
    phi = gaussian(g)
    assert abs(diamagnetic_gap(FieldPair(g, phi, 0.5 * phi))) < 1e-12
    assert abs(diamagnetic_gap(FieldPair(g, np.exp(0.9j) * phi, phi + 0j))) < 1e-10
    k = np.array([2, -1]) * math.pi / 8
    wave = np.exp(1j * (k[0] * g.coords[0] + k[1] * g.coords[1]))
    gap = diamagnetic_gap(FieldPair(g, wave * phi, np.zeros(g.shape, complex)))
    assert abs(gap - 0.5 * float(k @ k)) < 1e-6

import math

import numpy as np
import pytest

from gpe2.dynamics import EvolutionState, Propagator, Trajectory, conserved_check, evolve, strang_step
from gpe2.grid import FieldPair, Grid, gaussian
from gpe2.model import MassConstraint, ModelParams

from conftest import SYMMETRIC, random_pair

GENERIC = ModelParams(gamma=1.0, delta=0.2, lam=0.4, beta11=1.0, beta12=0.6, beta22=1.5)


@pytest.fixture(scope="module")
def g():
    return Grid(2, 8.0, 32)


def test_propagator_validation(g):
    with pytest.raises(ValueError):
        Propagator(ModelParams(), g, 0.0)
    with pytest.raises(ValueError):
        Propagator(ModelParams(dim=3), g, 0.1)
    with pytest.raises(ValueError):
        Propagator(ModelParams(), g, 0.1, precision="quad")
    with pytest.raises(ValueError):
        evolve(EvolutionState(0.0, FieldPair(g, gaussian(g), gaussian(g))), ModelParams(), -1.0, 0.1)


def test_zero_data_stays_zero(g):
    z = np.zeros(g.shape, complex)
    traj = evolve(EvolutionState(0.0, FieldPair(g, z, z)), GENERIC, 0.1, 0.01)
    assert not np.any(traj.final.pair.u1) and not np.any(traj.final.pair.u2)


def test_rabi_substep_full_transfer(g):
    lam = 0.5
    t = math.pi / (2 * lam)
    prop = Propagator(ModelParams(lam=lam), g, t)
    one = np.ones(g.shape, dtype=prop.dtype)
    a, b = prop.rabi(one, 0 * one)
    assert np.max(np.abs(a)) < 1e-10
    assert np.max(np.abs(b + 1j)) < 1e-10


def test_each_substep_conserves_total_mass(g):
    pair = random_pair(g, np.random.default_rng(0), MassConstraint(1.0, 0.8), complex_=True)
    prop = Propagator(GENERIC, g, 0.05)
    u1, u2 = prop.lift(pair.u1), prop.lift(pair.u2)

    def mass(a, b):
        return float(np.sum(np.abs(a) ** 2 + np.abs(b) ** 2)) * g.cell_volume

    m0 = mass(u1, u2)
    for out in (prop.kinetic(u1, u2), prop.kinetic(u1, u2, full=True), prop.potential(u1, u2, 0.05),
                prop.rabi(u1, u2)):
        assert abs(mass(*out) - m0) < 1e-12


def test_oscillator_eigenstate_is_stationary():
    g = Grid(2, 8.0, 64)
    phi = gaussian(g)
    state = EvolutionState(0.0, FieldPair(g, phi + 0j, np.zeros(g.shape, complex)))
    # splitting perturbs the eigenstate at O(dt^2): 1.6e-8 at dt=1e-3, 4e-9 at dt=5e-4
    traj = evolve(state, ModelParams(), 0.5, 5e-4, record_every=1000)
    u = traj.final.pair.u1
    assert np.max(np.abs(np.abs(u) - phi)) < 1e-8
    assert np.max(np.abs(u - np.exp(-0.5j) * phi)) < 1e-8


def test_time_reversibility(g):
    pair = random_pair(g, np.random.default_rng(1), MassConstraint(1.0, 1.0), complex_=True)
    s1 = strang_step(EvolutionState(0.0, pair), GENERIC, 0.02)
    back = strang_step(EvolutionState(0.0, s1.pair.conj()), GENERIC, 0.02)
    assert np.max(np.abs(back.pair.conj().u1 - pair.u1)) < 1e-10
    assert np.max(np.abs(back.pair.conj().u2 - pair.u2)) < 1e-10
    assert s1.step == 1 and s1.t == 0.02


def test_second_order_against_fine_reference(g):
    pair = random_pair(g, np.random.default_rng(2), MassConstraint(1.0, 1.0), complex_=True)
    T = 0.4

    def run(dt):
        return evolve(EvolutionState(0.0, pair), GENERIC, T, dt, record_every=10**6).final.pair

    ref = run(0.0025)
    errs = [run(dt).distance_sigma(ref) for dt in (0.04, 0.02)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_generic_run_swaps_component_mass(g):
    pair = random_pair(g, np.random.default_rng(3), MassConstraint(1.0, 0.5), complex_=True)
    traj = evolve(EvolutionState(0.0, pair), GENERIC, 2.0, 0.01, record_every=10)
    d = conserved_check(traj)
    assert d["mass_drift"] < 1e-12
    assert np.ptp(traj.mass1) > 1e-2
    cols = traj.columns()
    assert list(cols)[:5] == ["t", "mass1", "mass2", "mass_total", "energy"]
    assert len(cols["t"]) == 21 and cols["t"][-1] == pytest.approx(2.0)


def test_stationary_run_conserves(symmetric_ground_state):
    w = symmetric_ground_state.pair
    traj = evolve(EvolutionState(0.0, w), SYMMETRIC, 10.0, 1e-3, record_every=1000)
    d = conserved_check(traj)
    assert d["mass_drift"] < 1e-12
    assert d["energy_drift"] < 1e-8


def test_observables_and_snapshots(g):
    pair = FieldPair(g, gaussian(g) + 0j, gaussian(g) + 0j)
    traj = evolve(EvolutionState(0.0, pair), GENERIC, 0.05, 0.01, record_every=2,
                  observables={"m1x2": lambda p: 2 * p.masses()[0]}, keep_snapshots=True)
    assert len(traj) == 4 and len(traj.snapshots) == 4
    assert traj.extra["m1x2"][0] == pytest.approx(2.0)
    assert traj.final.step == 5


def test_single_step_drifts_vanish(g):
    pair = FieldPair(g, gaussian(g) + 0j, gaussian(g) + 0j)
    traj = evolve(EvolutionState(0.0, pair), GENERIC, 0.01, 0.01)
    d = conserved_check(traj)
    assert d["mass_drift"] < 1e-13 and d["energy_drift"] < 1e-3
    one = Trajectory(times=[0.0], mass1=[1.0], mass2=[1.0], energy=[2.0])
    assert conserved_check(one) == {"mass_drift": 0.0, "energy_drift": 0.0}
    with pytest.raises(ValueError):
        conserved_check(Trajectory())


def test_non_finite_aborts(g):
    pair = FieldPair(g, 100 * gaussian(g) + 0j, gaussian(g) + 0j)
    huge = ModelParams(beta11=1e308, beta22=1.0, beta12=0.0)
    with np.errstate(all="ignore"):
        traj = evolve(EvolutionState(0.0, pair), huge, 0.05, 0.01, precision="double")
    assert traj.aborted and traj.final.step == 0 and len(traj) == 1

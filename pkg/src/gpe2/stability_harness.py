"""Orbital stability experiments and the 3D scaling probe.

The orbit of a real minimizer ``w`` is ``{(e^{i a} w1, e^{i b} w2)}``. The
Sigma-distance to it is minimized in closed form: for each component the
best phase is ``arg <psi_i, w_i>_Sigma``. Standing-wave phases picked up
during the evolution are therefore absorbed by the metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .dynamics import EvolutionState, evolve
from .functionals import energy_tilde
from .grid import FieldPair, Grid, gaussian
from .ground_state import GroundStateResult, SolverOptions, _require_well_posed, minimize_real
from .model import MassConstraint, ModelParams

PERTURBATIONS = ("random_smooth", "phase_gradient", "mass_shift")


# -- orbit distance -----------------------------------------------------------


def orbit_phases(psi: FieldPair, w: FieldPair) -> tuple[float, float]:
    """Minimizing phases; 0 where the Sigma inner product vanishes."""
    g = psi.grid
    return tuple(float(np.angle(g.sigma_inner(p, q))) for p, q in zip(psi, w))


def orbit_distance(psi: FieldPair, w: FieldPair) -> float:
    """Cartesian Sigma-distance from ``psi`` to the phase orbit of ``w``."""
    psi.same_grid(w)
    g = psi.grid
    th = orbit_phases(psi, w)
    total = 0.0
    for p, q, t in zip(psi, w, th):
        # evaluated directly rather than through the expanded square, which cancels
        total += g.sigma_norm_sq(p - np.exp(1j * t) * q)
    return math.sqrt(total)


def orbit_distance_bruteforce(psi: FieldPair, w: FieldPair, n: int = 64) -> float:
    """Search oracle: ``n x n`` phase grid, then a Nelder-Mead polish of the best node.

    Uses the expansion ``|p - e^{ia} q|^2 = |p|^2 + |q|^2 - 2 Re(e^{-ia} <p, q>)``
    jointly in both phases, without the per-component argmax.
    """
    psi.same_grid(w)
    g = psi.grid
    a = [g.sigma_norm_sq(p) + g.sigma_norm_sq(q) for p, q in zip(psi, w)]
    ip = [complex(g.sigma_inner(p, q)) for p, q in zip(psi, w)]

    def sq(t1, t2):
        return (
            a[0] - 2.0 * (np.exp(-1j * t1) * ip[0]).real + a[1] - 2.0 * (np.exp(-1j * t2) * ip[1]).real
        )

    nodes = np.arange(n) * (2.0 * np.pi / n)
    t1, t2 = np.meshgrid(nodes, nodes, indexing="ij")
    vals = sq(t1, t2)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    res = minimize(
        lambda t: sq(t[0], t[1]),
        x0=[nodes[i], nodes[j]],
        method="Nelder-Mead",
        options={"xatol": 1e-13, "fatol": 1e-18, "maxiter": 4000},
    )
    return math.sqrt(max(min(float(res.fun), float(vals[i, j])), 0.0))


# -- perturbations ------------------------------------------------------------


def _smooth_field(grid: Grid, width: float, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian-envelope field with a few random low Fourier modes."""
    env = np.exp(-0.5 * grid.r2 / width**2)
    out = np.zeros(grid.shape, dtype=complex)
    for _ in range(4):
        k = rng.normal(size=grid.dim) / width
        amp = rng.normal() + 1j * rng.normal()
        out += amp * np.exp(1j * sum(ki * x for ki, x in zip(k, grid.coords)))
    return env * out


def perturb(w: FieldPair, mode: str, size: float, seed: int = 0) -> FieldPair:
    """Complex data at Sigma-distance exactly ``size`` from ``w``; masses are not reimposed."""
    if mode not in PERTURBATIONS:
        raise ValueError(f"mode must be one of {PERTURBATIONS}, got {mode!r}")
    if not size >= 0:
        raise ValueError(f"size must be nonnegative, got {size}")
    g = w.grid
    base = w.as_complex()
    if size == 0:
        return base
    rng = np.random.default_rng(seed)
    u1, u2 = base.u1, base.u2
    if mode == "mass_shift":
        # scale the larger component: changes its mass by O(size)
        i = int(g.sigma_norm_sq(u2) > g.sigma_norm_sq(u1))
        norm = math.sqrt(g.sigma_norm_sq((u1, u2)[i]))
        if norm == 0:
            raise ValueError("cannot mass-shift an empty pair")
        f = 1.0 + size / norm
        return FieldPair(g, u1 * f, u2) if i == 0 else FieldPair(g, u1, u2 * f)
    if mode == "random_smooth":
        width = math.sqrt(max(g.moment_sq(u1) + g.moment_sq(u2), 1e-12) / max(base.total_mass(), 1e-300))
        d1, d2 = _smooth_field(g, width, rng), _smooth_field(g, width, rng)
        scale = size / math.sqrt(g.sigma_norm_sq(d1) + g.sigma_norm_sq(d2))
        return FieldPair(g, u1 + scale * d1, u2 + scale * d2)
    # phase_gradient: psi = e^{i s k.x} w with s chosen so the distance is exactly size
    direction = rng.normal(size=g.dim)
    direction /= np.linalg.norm(direction)
    phase = sum(d * x for d, x in zip(direction, g.coords))

    def gap(s):
        e = np.exp(1j * s * phase) - 1.0
        return math.sqrt(g.sigma_norm_sq(e * u1) + g.sigma_norm_sq(e * u2)) - size

    hi = 1e-3
    while gap(hi) < 0:
        hi *= 2.0
        if hi > 1e3:
            raise ValueError(f"size {size} is beyond the reach of a phase gradient")
    s = brentq(gap, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    f = np.exp(1j * s * phase)
    return FieldPair(g, f * u1, f * u2)


# -- stability experiment -----------------------------------------------------


@dataclass
class StabilityReport:
    mode: str
    size: float
    epsilon: float
    times: list[float]
    distance: list[float]
    mass1: list[float]
    mass2: list[float]
    energy: list[float]
    sup_distance: float
    mass_drift: float
    energy_drift: float
    component_mass_swing: float  # max over t of |mass_i(t) - mass_i(0)|
    aborted: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return not self.aborted and self.sup_distance <= self.epsilon

    @property
    def amplification(self) -> float:
        return self.sup_distance / self.size if self.size > 0 else math.nan

    def columns(self) -> dict[str, list[float]]:
        return {
            "t": self.times,
            "d": self.distance,
            "mass1": self.mass1,
            "mass2": self.mass2,
            "mass_total": [a + b for a, b in zip(self.mass1, self.mass2)],
            "energy": self.energy,
        }

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "size": self.size,
            "epsilon": self.epsilon,
            "sup_distance": self.sup_distance,
            "initial_distance": self.distance[0] if self.distance else math.nan,
            "amplification": self.amplification,
            "verdict": self.verdict,
            "mass_drift": self.mass_drift,
            "energy_drift": self.energy_drift,
            "component_mass_swing": self.component_mass_swing,
            "aborted": self.aborted,
            "samples": len(self.times),
            **self.extra,
        }


class EvolutionFailure(RuntimeError):
    """An evolution blew up; ``reports`` holds everything finished so far, the failed run last."""

    def __init__(self, message: str, reports: list[StabilityReport]):
        super().__init__(message)
        self.reports = reports


def amplification_fit(reports: list[StabilityReport]) -> float:
    """Least-squares slope of ``sup d`` against ``size`` through the origin."""
    xs = np.array([r.size for r in reports if r.size > 0])
    ys = np.array([r.sup_distance for r in reports if r.size > 0])
    if xs.size == 0:
        return math.nan
    return float(xs @ ys / (xs @ xs))


def stability_experiment(
    params: ModelParams,
    masses: MassConstraint,
    sizes: list[float],
    T: float,
    dt: float,
    epsilon: float,
    grid: Grid,
    mode: str = "random_smooth",
    seed: int = 0,
    record_every: int = 100,
    opts: SolverOptions | None = None,
    ground_state: GroundStateResult | None = None,
    precision: str = "double",
    cb: float | None = None,
) -> list[StabilityReport]:
    """Perturb the real ground state by each size, evolve to ``T`` and track the orbit distance.

    Inadmissible parameters are refused before any solve or evolution.
    """
    if mode not in PERTURBATIONS:
        raise ValueError(f"mode must be one of {PERTURBATIONS}, got {mode!r}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    _require_well_posed(params, masses, grid, cb)
    gs = ground_state or minimize_real(params, masses, grid, opts, cb)
    if not gs.converged:
        raise RuntimeError("ground state did not converge; refusing to run the stability experiment")
    w = gs.pair
    reports: list[StabilityReport] = []
    for size in sizes:
        psi0 = perturb(w, mode, size, seed)
        traj = evolve(
            EvolutionState(0.0, psi0),
            params,
            T,
            dt,
            record_every=record_every,
            observables={"d": lambda p: orbit_distance(p, w)},
            precision=precision,
        )
        m_tot = np.asarray(traj.mass_total)
        e = np.asarray(traj.energy)
        swing = max(
            float(np.max(np.abs(np.asarray(traj.mass1) - traj.mass1[0]))),
            float(np.max(np.abs(np.asarray(traj.mass2) - traj.mass2[0]))),
        )
        d = traj.extra["d"]
        report = StabilityReport(
            mode=mode,
            size=float(size),
            epsilon=epsilon,
            times=traj.times,
            distance=d,
            mass1=traj.mass1,
            mass2=traj.mass2,
            energy=traj.energy,
            sup_distance=float(max(d)),
            mass_drift=float(np.max(np.abs(m_tot - m_tot[0]))),
            energy_drift=float(np.max(np.abs(e - e[0]))),
            component_mass_swing=swing,
            aborted=traj.aborted,
            extra={"mu1": gs.mu1, "mu2": gs.mu2, "seed": seed, "dt": dt, "T": T},
        )
        reports.append(report)
        if traj.aborted:
            raise EvolutionFailure(f"evolution produced non-finite values for size {size}", reports)
    return reports


# -- 3D scaling probe ---------------------------------------------------------


@dataclass
class ScalingProbe:
    sigmas: list[float]
    energies: list[float]
    closed_form: list[float]

    @property
    def differences(self) -> list[float]:
        return list(np.diff(self.energies))

    @property
    def strictly_decreasing(self) -> bool:
        return all(d < 0 for d in self.differences)

    @property
    def accelerating(self) -> bool:
        d = self.differences
        return all(abs(b) > abs(a) for a, b in zip(d, d[1:]))

    @property
    def eventually_increasing(self) -> bool:
        d = self.differences
        return bool(d) and bool(d[-1] > 0)

    def to_dict(self) -> dict:
        return {
            "sigmas": self.sigmas,
            "energies": self.energies,
            "closed_form": self.closed_form,
            "strictly_decreasing": self.strictly_decreasing,
            "accelerating": self.accelerating,
            "eventually_increasing": self.eventually_increasing,
        }


def scaled_gaussian_energy(params: ModelParams, masses: MassConstraint, sigma: float) -> float:
    """Modulus energy of ``sigma^{N/2} phi(sigma x)`` for the Gaussian pair ``phi``, in closed form."""
    n = params.dim
    c1, c2 = masses.as_tuple()
    m = c1**2 + c2**2
    quartic = sigma**n * (2.0 * np.pi) ** (-n / 2.0)  # int phi^4 for a unit-mass Gaussian
    return (
        0.25 * n * sigma**2 * m
        + 0.25 * n * params.gamma**2 * m / sigma**2
        + params.delta * c1**2
        + 0.5 * quartic * (params.beta11 * c1**4 + params.beta22 * c2**4)
        + quartic * params.beta12 * c1**2 * c2**2
        - 2.0 * abs(params.lam) * c1 * c2
    )


def illposedness_probe(
    params: ModelParams,
    masses: MassConstraint,
    sigmas: list[float],
    points: int = 64,
    scale: float = 8.0,
) -> ScalingProbe:
    """Modulus energy along the mass-preserving dilations of a Gaussian pair in 3D.

    Each dilation is sampled on its own box ``L = scale / sigma``. All-negative
    interactions give the ill-posed descent; all-positive ones are the contrast.
    """
    if params.dim != 3:
        raise ValueError("the scaling probe is three-dimensional")
    b = (params.beta11, params.beta12, params.beta22)
    if not (all(x < 0 for x in b) or all(x > 0 for x in b)):
        raise ValueError(f"interactions must be all negative (or all positive for contrast), got {b}")
    if any(not s > 0 for s in sigmas):
        raise ValueError("sigmas must be positive")
    energies, closed = [], []
    for s in sigmas:
        grid = Grid(3, scale / s, points)
        # gaussian(gamma=s^2) is exactly the unit-mass dilation by s
        phi = gaussian(grid, s**2)
        pair = FieldPair(grid, masses.c1 * phi, masses.c2 * phi)
        energies.append(energy_tilde(pair, params).total)
        closed.append(scaled_gaussian_energy(params, masses, s))
    return ScalingProbe(list(map(float, sigmas)), energies, closed)

"""Constrained ground states by normalized gradient flow, plus the checks
built on them: symmetry, uniqueness, real/complex equivalence and the
phase factorization of complex minimizers.

One flow step, per component ``i`` with ``G_i`` the non-Laplacian part of
the energy gradient and ``mu_i`` the current Rayleigh multiplier::

    u_i* = (I - tau/2 Laplacian)^{-1} (u_i - tau (G_i(u) - mu_i u_i))
    u_i <- c_i u_i* / |u_i*|_2              (real flow: u_i* -> |u_i*| first)

Carrying ``mu_i`` in the explicit part makes the fixed points exactly the
solutions of the Euler-Lagrange system, independent of ``tau``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .functionals import (
    EnergyBreakdown,
    chemical_potentials,
    el_residual,
    energy_hat,
    energy_tilde,
)
from .gn_constant import gn_constant_shooting
from .grid import FieldPair, Grid, gaussian
from .model import AdmissibilityError, MassConstraint, ModelParams, check_admissibility, well_posedness

log = logging.getLogger(__name__)

INITIAL_GUESSES = ("gaussian", "random", "provided")


@lru_cache(maxsize=1)
def sharp_cb() -> float:
    """Sharp 2D Gagliardo-Nirenberg constant from the shooting route (cached)."""
    return gn_constant_shooting(1e-10).value


@dataclass(frozen=True)
class SolverOptions:
    tau: float | None = None  # default 0.01 / gamma
    max_iter: int = 100_000
    tol: float = 1e-10
    residual_tol: float = 1e-6
    seed: int = 0
    initial: str = "gaussian"
    provided: FieldPair | None = None
    record_energy: bool = False

    def __post_init__(self) -> None:
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not (self.tol > 0 and self.residual_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.initial not in INITIAL_GUESSES:
            raise ValueError(f"initial must be one of {INITIAL_GUESSES}, got {self.initial!r}")
        if self.initial == "provided" and self.provided is None:
            raise ValueError("initial='provided' needs a provided pair")

    def step(self, params: ModelParams) -> float:
        return self.tau if self.tau is not None else 0.01 / params.gamma


@dataclass
class GroundStateResult:
    pair: FieldPair
    energy: float
    breakdown: EnergyBreakdown
    mu1: float
    mu2: float
    el_residual: float
    iterations: int
    converged: bool
    energy_history: list[float] = field(default_factory=list)

    def summary(self) -> dict:
        m1, m2 = self.pair.masses()
        return {
            "energy": self.energy,
            "breakdown": self.breakdown.to_dict(),
            "mu1": self.mu1,
            "mu2": self.mu2,
            "el_residual": self.el_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "mass1": m1,
            "mass2": m2,
            "sigma_norm": self.pair.sigma_norm(),
        }


# -- initial data -----------------------------------------------------------


def _random_profile(grid: Grid, gamma: float, rng: np.random.Generator) -> np.ndarray:
    # a few positive off-centre bumps: non-radial, strictly positive
    width0 = 1.0 / math.sqrt(gamma)
    out = np.zeros(grid.shape)
    for _ in range(3):
        centre = rng.uniform(-1.0, 1.0, grid.dim) * width0
        width = rng.uniform(0.6, 1.4) * width0
        d2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, centre))
        out += rng.uniform(0.3, 1.0) * np.exp(-0.5 * d2 / width**2)
    return out


def _random_phase(grid: Grid, gamma: float, rng: np.random.Generator) -> np.ndarray:
    slope = rng.normal(size=grid.dim) * 0.5 * math.sqrt(gamma)
    return rng.uniform(0, 2 * np.pi) + sum(s * c for s, c in zip(slope, grid.coords))


def initial_pair(
    params: ModelParams, masses: MassConstraint, grid: Grid, opts: SolverOptions, complex_: bool = False
) -> FieldPair:
    """Starting pair on the constraint set; empty components are the zero field."""
    if opts.initial == "provided":
        u1, u2 = (np.array(u, copy=True) for u in opts.provided)
        if not complex_:
            u1, u2 = np.abs(u1), np.abs(u2)
    elif opts.initial == "gaussian":
        u1 = gaussian(grid, params.gamma)
        u2 = u1.copy()
    else:
        rng = np.random.default_rng(opts.seed)
        u1 = _random_profile(grid, params.gamma, rng)
        u2 = _random_profile(grid, params.gamma, rng)
        if complex_:
            u1 = u1 * np.exp(1j * _random_phase(grid, params.gamma, rng))
            u2 = u2 * np.exp(1j * _random_phase(grid, params.gamma, rng))
    if complex_:
        u1, u2 = u1.astype(complex), u2.astype(complex)
    return FieldPair(grid, *_normalize(grid, (u1, u2), masses))


def _normalize(grid: Grid, us, masses: MassConstraint):
    out = []
    for u, c in zip(us, masses.as_tuple()):
        if c == 0:
            out.append(np.zeros_like(u))
            continue
        m = grid.mass(u)
        if not m > 0:
            raise ValueError("cannot normalize a zero component to positive mass")
        out.append(u * (c / math.sqrt(m)))
    return out


# -- the flow ----------------------------------------------------------------


def _require_well_posed(params: ModelParams, masses: MassConstraint, grid: Grid, cb: float | None):
    if grid.dim != params.dim:
        raise ValueError(f"grid dim {grid.dim} does not match params dim {params.dim}")
    if params.dim == 2 and cb is None:
        cb = sharp_cb()
    report = well_posedness(params, masses, cb)
    if not report.admissible:
        raise AdmissibilityError(
            f"minimization may be ill-posed for these parameters ({report.condition}: {report.margins})"
        )
    return report


def _flow(
    params: ModelParams,
    masses: MassConstraint,
    grid: Grid,
    opts: SolverOptions,
    start: FieldPair,
    real: bool,
):
    tau = opts.step(params)
    h = grid.cell_volume
    v = 0.5 * params.gamma**2 * grid.r2
    # the real flow minimizes the modulus energy: coupling -|lam| on the nonnegative cone
    lam = -abs(params.lam) if real else params.lam
    cs = masses.as_tuple()
    u1, u2 = start.u1, start.u2
    energy_fn = energy_tilde if real else energy_hat
    history = []
    if opts.record_energy:
        history.append(energy_fn(FieldPair(grid, u1, u2), params).total)
    increment = math.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        d1 = np.abs(u1) ** 2
        d2 = np.abs(u2) ** 2
        g1 = (v + params.delta + params.beta11 * d1 + params.beta12 * d2) * u1 + lam * u2
        g2 = (v + params.beta22 * d2 + params.beta12 * d1) * u2 + lam * u1
        new = []
        for u, g, c in ((u1, g1, cs[0]), (u2, g2, cs[1])):
            if c == 0:
                new.append(u)
                continue
            mu = (0.5 * grid.grad_norm_sq(u) + float(np.vdot(u, g).real) * h) / c**2
            w = grid.solve_helmholtz(u - tau * (g - mu * u), 1.0, 0.5 * tau)
            if real:
                w = np.abs(w)
            new.append(w * (c / math.sqrt(grid.mass(w))))
        increment = max(float(np.max(np.abs(a - b))) for a, b in zip(new, (u1, u2))) / tau
        u1, u2 = new
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
            raise FloatingPointError(f"gradient flow diverged at iteration {it}; reduce tau")
        if opts.record_energy:
            history.append(energy_fn(FieldPair(grid, u1, u2), params).total)
        if increment < opts.tol:
            break
    return FieldPair(grid, u1, u2), it, increment, history


def _finish(pair, params, masses, opts, it, increment, history, real) -> GroundStateResult:
    eff = params.tilde() if real else params
    breakdown = energy_tilde(pair, params) if real else energy_hat(pair, params)
    mu = chemical_potentials(pair, eff, masses)
    res = el_residual(pair, eff, mu)
    converged = increment < opts.tol and res <= opts.residual_tol
    if not converged:
        log.warning("flow stopped after %d iterations: increment %.3e, residual %.3e", it, increment, res)
    return GroundStateResult(pair, breakdown.total, breakdown, mu[0], mu[1], res, it, converged, history)


def minimize_real(
    params: ModelParams,
    masses: MassConstraint,
    grid: Grid,
    opts: SolverOptions | None = None,
    cb: float | None = None,
) -> GroundStateResult:
    """Nonnegative minimizer of the modulus energy on the real constraint set."""
    opts = opts or SolverOptions()
    _require_well_posed(params, masses, grid, cb)
    start = initial_pair(params, masses, grid, opts, complex_=False)
    pair, it, inc, hist = _flow(params, masses, grid, opts, start, real=True)
    return _finish(pair, params, masses, opts, it, inc, hist, real=True)


def minimize_complex(
    params: ModelParams,
    masses: MassConstraint,
    grid: Grid,
    opts: SolverOptions | None = None,
    cb: float | None = None,
) -> GroundStateResult:
    """Minimizer of the phase-sensitive energy over complex pairs."""
    opts = opts or SolverOptions()
    _require_well_posed(params, masses, grid, cb)
    start = initial_pair(params, masses, grid, opts, complex_=True)
    pair, it, inc, hist = _flow(params, masses, grid, opts, start, real=False)
    return _finish(pair, params, masses, opts, it, inc, hist, real=False)


def relative_overlap(pair: FieldPair) -> float:
    """``int Re(psi1 conj(psi2))``; its sign exposes the relative phase."""
    return float(np.sum((pair.u1 * np.conj(pair.u2)).real)) * pair.grid.cell_volume


# -- orbit factorization ------------------------------------------------------


@dataclass
class OrbitFactorization:
    theta1: float
    theta2: float
    modulus_pair: FieldPair
    factor_residual: float
    max_phase_deviation: float


def align_phases(z: FieldPair, w: FieldPair) -> tuple[float, float]:
    """Phases ``theta_i = arg <z_i, w_i>_Sigma``; 0 for an empty component.

    Raises ``ValueError`` when a nonempty pair of components is Sigma-orthogonal.
    """
    g = z.grid
    out = []
    for zi, wi in zip(z, w):
        if not np.any(zi) and not np.any(wi):
            out.append(0.0)
            continue
        ip = g.sigma_inner(zi, wi)
        scale = math.sqrt(g.sigma_norm_sq(zi) * g.sigma_norm_sq(wi))
        if abs(ip) <= 1e-14 * scale:
            raise ValueError("phase undefined: components are Sigma-orthogonal")
        out.append(float(np.angle(ip)) % (2 * np.pi))
    return out[0], out[1]


def orbit_factorize(z: FieldPair, w: FieldPair, mass_rtol: float = 1e-6) -> OrbitFactorization:
    """Write ``z`` as ``(e^{i theta1} w1, e^{i theta2} w2)`` plus a residual."""
    z.same_grid(w)
    g = z.grid
    for mz, mw in zip(z.masses(), w.masses()):
        if abs(mz - mw) > mass_rtol * max(1.0, mw):
            raise ValueError(f"masses differ: {mz} vs {mw}")
    th = align_phases(z, w)
    rotated = FieldPair(g, np.exp(1j * th[0]) * w.u1, np.exp(1j * th[1]) * w.u2)
    residual = z.as_complex().distance_sigma(rotated)
    dev = 0.0
    for zi, t in zip(z, th):
        amp = np.abs(zi)
        if amp.max() == 0:
            continue
        bulk = amp > 1e-8 * amp.max()
        dev = max(dev, float(np.max(np.abs(np.angle(zi[bulk] * np.exp(-1j * t))))))
    return OrbitFactorization(th[0], th[1], z.modulus(), residual, dev)


# -- qualitative checks -------------------------------------------------------


@dataclass
class SymmetryReport:
    min_value: float
    angular_spread: float  # max shell std / max |w|
    max_radial_increase: float  # max rise of the shell mean with radius

    def passed(self, angular_tol: float = 1e-8, radial_tol: float = 1e-10) -> bool:
        return self.min_value >= 0 and self.angular_spread < angular_tol and self.max_radial_increase <= radial_tol


def symmetry_report(grid: Grid, w: np.ndarray) -> SymmetryReport:
    """Group cells into exact-radius shells and test radial monotonicity."""
    r2 = grid.r2.ravel()
    vals = np.asarray(w).ravel()
    keys, inverse = np.unique(r2, return_inverse=True)
    counts = np.bincount(inverse)
    mean = np.bincount(inverse, weights=vals) / counts
    var = np.bincount(inverse, weights=(vals - mean[inverse]) ** 2) / counts
    top = float(np.max(np.abs(vals))) or 1.0
    inside = keys <= grid.half_extent**2  # shells cut by the box are not full circles
    rise = np.diff(mean[inside])
    return SymmetryReport(
        min_value=float(vals.min()),
        angular_spread=float(np.sqrt(var.max())) / top,
        max_radial_increase=float(max(rise.max(initial=0.0), 0.0)),
    )


@dataclass
class UniquenessReport:
    max_distance: float
    reference_norm: float
    n_converged: int
    excluded_seeds: list[int]
    guaranteed: bool
    flag: str

    @property
    def relative(self) -> float:
        return self.max_distance / self.reference_norm if self.reference_norm else math.inf

    def to_dict(self) -> dict:
        return {
            "max_distance": self.max_distance,
            "relative": self.relative,
            "reference_norm": self.reference_norm,
            "n_converged": self.n_converged,
            "excluded_seeds": self.excluded_seeds,
            "guaranteed": self.guaranteed,
            "flag": self.flag,
        }


def uniqueness_probe(
    params: ModelParams,
    masses: MassConstraint,
    grid: Grid,
    n_seeds: int = 5,
    opts: SolverOptions | None = None,
) -> UniquenessReport:
    """Max pairwise Sigma-distance between minimizers from random starts."""
    opts = opts or SolverOptions()
    guaranteed = check_admissibility(params, masses, mode="A2").admissible
    flag = "A2 holds" if guaranteed else "uniqueness not guaranteed"
    results, excluded = [], []
    for s in range(n_seeds):
        r = minimize_real(params, masses, grid, replace(opts, initial="random", seed=opts.seed + s))
        if r.converged:
            results.append(r.pair)
        else:
            excluded.append(opts.seed + s)
    dmax = max((a.distance_sigma(b) for a, b in itertools.combinations(results, 2)), default=0.0)
    ref = results[0].sigma_norm() if results else 0.0
    return UniquenessReport(dmax, ref, len(results), excluded, guaranteed, flag)


@dataclass
class EquivalenceReport:
    I_tilde: float
    I_hat: float
    gap: float
    passed: bool
    real: GroundStateResult
    complex: GroundStateResult

    def to_dict(self) -> dict:
        return {
            "I_tilde": self.I_tilde,
            "I_hat": self.I_hat,
            "gap": self.gap,
            "passed": self.passed,
            "relative_overlap": relative_overlap(self.complex.pair),
            "real": self.real.summary(),
            "complex": self.complex.summary(),
        }


def equivalence_check(
    params: ModelParams,
    masses: MassConstraint,
    grid: Grid,
    opts: SolverOptions | None = None,
    complex_opts: SolverOptions | None = None,
) -> EquivalenceReport:
    """Compare the real modulus infimum with the complex phase-sensitive one."""
    opts = opts or SolverOptions()
    complex_opts = complex_opts or replace(opts, initial="random")
    real = minimize_real(params, masses, grid, opts)
    cplx = minimize_complex(params, masses, grid, complex_opts)
    if not (real.converged and cplx.converged):
        raise RuntimeError("equivalence check needs both solvers converged")
    gap = abs(real.energy - cplx.energy)
    return EquivalenceReport(real.energy, cplx.energy, gap, gap <= 1e-6 * (1 + abs(real.energy)), real, cplx)

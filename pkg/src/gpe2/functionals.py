"""Energy functionals, the Euler-Lagrange operator and the inequality chain.

Three energies share one quadratic/quartic core ``E0``:

* ``E0``      - kinetic + trap + detuning + quartic interactions,
* ``E_hat``   - ``E0 + 2 lam int Re(psi1 conj(psi2))``,
* ``E_tilde`` - ``E0 - 2|lam| int |psi1||psi2|`` (evaluated on moduli).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import FieldPair
from .model import MassConstraint, ModelParams

ZERO_SET_RTOL = 1e-14


@dataclass(frozen=True)
class EnergyBreakdown:
    which: str
    kinetic: float
    trap: float
    detuning: float
    self1: float
    self2: float
    cross: float
    coupling: float

    @property
    def total(self) -> float:
        return (
            self.kinetic + self.trap + self.detuning + self.self1 + self.self2 + self.cross + self.coupling
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d


def _core(pair: FieldPair, params: ModelParams) -> dict[str, float]:
    g = pair.grid
    if g.dim != params.dim:
        raise ValueError(f"grid dim {g.dim} does not match params dim {params.dim}")
    d1 = np.abs(pair.u1) ** 2
    d2 = np.abs(pair.u2) ** 2
    h = g.cell_volume
    return dict(
        kinetic=0.5 * (g.grad_norm_sq(pair.u1) + g.grad_norm_sq(pair.u2)),
        trap=0.5 * params.gamma**2 * float(np.sum(g.r2 * (d1 + d2))) * h,
        detuning=params.delta * float(d1.sum()) * h,
        self1=0.5 * params.beta11 * float(np.sum(d1 * d1)) * h,
        self2=0.5 * params.beta22 * float(np.sum(d2 * d2)) * h,
        cross=params.beta12 * float(np.sum(d1 * d2)) * h,
    )


def energy_E0(pair: FieldPair, params: ModelParams) -> EnergyBreakdown:
    return EnergyBreakdown("E0", coupling=0.0, **_core(pair, params))


def energy_hat(pair: FieldPair, params: ModelParams) -> EnergyBreakdown:
    """Energy with the phase-sensitive Rabi term ``2 lam int Re(psi1 conj(psi2))``."""
    core = _core(pair, params)
    overlap = float(np.sum((pair.u1 * np.conj(pair.u2)).real)) * pair.grid.cell_volume
    return EnergyBreakdown("E_hat", coupling=2.0 * params.lam * overlap, **core)


def energy_tilde(pair: FieldPair, params: ModelParams) -> EnergyBreakdown:
    """Energy of the moduli with the coupling replaced by ``-2|lam| int |psi1||psi2|``."""
    rho = pair.modulus() if pair.is_complex else pair
    core = _core(rho, params)
    overlap = float(np.sum(np.abs(pair.u1) * np.abs(pair.u2))) * pair.grid.cell_volume
    return EnergyBreakdown("E_tilde", coupling=-2.0 * abs(params.lam) * overlap, **core)


def local_potential(pair: FieldPair, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise multipliers ``V + delta_j + beta_jj|psi_j|^2 + beta_ji|psi_i|^2``."""
    g = pair.grid
    d1 = np.abs(pair.u1) ** 2
    d2 = np.abs(pair.u2) ** 2
    v = 0.5 * params.gamma**2 * g.r2
    w1 = v + params.delta + params.beta11 * d1 + params.beta12 * d2
    w2 = v + params.beta22 * d2 + params.beta12 * d1
    return w1, w2


def el_gradient(pair: FieldPair, params: ModelParams) -> FieldPair:
    """Left-hand operator of the stationary system applied to ``pair``.

    Returns ``(L1 psi1 + lam psi2, L2 psi2 + lam psi1)``; at a critical point
    this equals ``(mu1 psi1, mu2 psi2)``. It is half the first variation of
    ``E_hat`` with respect to the real L2 pairing.
    """
    g = pair.grid
    w1, w2 = local_potential(pair, params)
    r1 = -0.5 * g.laplacian(pair.u1) + w1 * pair.u1 + params.lam * pair.u2
    r2 = -0.5 * g.laplacian(pair.u2) + w2 * pair.u2 + params.lam * pair.u1
    return FieldPair(g, r1, r2)


def chemical_potentials(
    pair: FieldPair, params: ModelParams, masses: MassConstraint
) -> tuple[float, float]:
    """Multipliers ``mu_i = Re<(el_gradient)_i, psi_i> / c_i^2``; NaN for an empty component."""
    g = pair.grid
    grad = el_gradient(pair, params)
    out = []
    for gi, ui, ci in zip(grad, pair, masses.as_tuple()):
        out.append(float(g.inner(gi, ui).real) / ci**2 if ci > 0 else math.nan)
    return out[0], out[1]


def el_residual(pair: FieldPair, params: ModelParams, mu: tuple[float, float]) -> float:
    """L2 norm of ``el_gradient(pair) - (mu1 psi1, mu2 psi2)``; NaN multipliers count as 0."""
    g = pair.grid
    grad = el_gradient(pair, params)
    total = 0.0
    for gi, ui, m in zip(grad, pair, mu):
        m = 0.0 if math.isnan(m) else m
        total += g.mass(gi - m * ui)
    return math.sqrt(total)


def inequality_gaps(
    pair: FieldPair, params: ModelParams, masses: MassConstraint, cb: float, mass_tol: float = 1e-8
) -> dict[str, float]:
    """Slack in each bound used to show the 2D energy is bounded below.

    ``gn1``/``gn2``: Gagliardo-Nirenberg, ``cs``: Cauchy-Schwarz on the cross
    term, ``young``: the Young splitting of the cross term, ``coup``: the
    Rabi term against ``2|lam| c1 c2``. Each is nonnegative for valid ``cb``.
    """
    g = pair.grid
    if g.dim != 2:
        raise ValueError("the Gagliardo-Nirenberg chain is two-dimensional")
    if pair.is_complex or np.any(pair.u1 < 0) or np.any(pair.u2 < 0):
        raise ValueError("inequality gaps take a real nonnegative pair")
    for ui, ci in zip(pair, masses.as_tuple()):
        m = g.mass(ui)
        if abs(m - ci**2) > mass_tol * max(1.0, ci**2):
            raise ValueError(f"pair is off the constraint set: mass {m} vs {ci**2}")
    c1, c2 = masses.as_tuple()
    u1, u2 = pair
    h = g.cell_volume
    k1, k2 = g.grad_norm_sq(u1), g.grad_norm_sq(u2)
    q1 = float(np.sum(u1**4)) * h
    q2 = float(np.sum(u2**4)) * h
    x12 = float(np.sum(u1**2 * u2**2)) * h
    lam = abs(params.lam)
    return {
        "gn1": k1 * c1**2 / cb - q1,
        "gn2": k2 * c2**2 / cb - q2,
        "cs": math.sqrt(q1) * math.sqrt(q2) - x12,
        "young": c1 * c2 / (2.0 * cb) * (k1 + k2) - x12,
        "coup": 2.0 * lam * c1 * c2 - 2.0 * lam * float(np.sum(u1 * u2)) * h,
    }


def modulus_gradient(grid, z: np.ndarray) -> list[np.ndarray]:
    """Gradient of ``|z|`` by the chain rule, zero on the (numerical) zero set."""
    rho = np.abs(z)
    dz = grid.gradient(z)
    support = rho > ZERO_SET_RTOL * rho.max() if rho.size and rho.max() > 0 else np.zeros(rho.shape, bool)
    safe = np.where(support, rho, 1.0)
    return [np.where(support, (np.conj(z) * d).real / safe, 0.0) for d in dz]


def diamagnetic_gap(pair: FieldPair) -> float:
    """``(||grad z||^2 - ||grad |z| ||^2) / 2`` summed over both components."""
    g = pair.grid
    gap = 0.0
    for z in pair:
        dz = g.gradient(z)
        drho = modulus_gradient(g, z)
        pointwise = sum(np.abs(d) ** 2 for d in dz) - sum(d**2 for d in drho)
        gap += 0.5 * float(np.sum(pointwise)) * g.cell_volume
    return gap

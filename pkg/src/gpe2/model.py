"""Model coefficients, mass constraints and well-posedness conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

CONDITIONS = ("A1", "A1_relaxed", "A1_prime", "A1_N3", "A1_prime_N3", "A2")

_DIM_FOR_MODE = {
    "A1": 2,
    "A1_relaxed": 2,
    "A1_prime": 2,
    "A1_N3": 3,
    "A1_prime_N3": 3,
}


class AdmissibilityError(ValueError):
    """Raised when a computation needs parameters the model does not admit."""


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the coupled Gross-Pitaevskii system.

    ``delta`` is the detuning and acts on component 1 only; ``lam`` is the
    Rabi frequency; ``beta`` holds ``(beta11, beta12, beta22)``.
    """

    gamma: float = 1.0
    delta: float = 0.0
    lam: float = 0.0
    beta11: float = 0.0
    beta12: float = 0.0
    beta22: float = 0.0
    dim: int = 2

    def __post_init__(self) -> None:
        for name in ("gamma", "delta", "lam", "beta11", "beta12", "beta22"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")

    @property
    def beta(self) -> np.ndarray:
        return np.array([[self.beta11, self.beta12], [self.beta12, self.beta22]])

    def tilde(self) -> ModelParams:
        """Parameters whose Rabi term reproduces ``-2|lam| int |u1||u2|`` on nonnegative pairs."""
        return replace(self, lam=-abs(self.lam))


@dataclass(frozen=True)
class MassConstraint:
    """Square roots of the component masses: ``int |psi_i|^2 = c_i^2``."""

    c1: float
    c2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c1) and math.isfinite(self.c2)):
            raise ValueError("masses must be finite")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be nonnegative")
        if self.c1 == 0 and self.c2 == 0:
            raise ValueError("at least one of c1, c2 must be positive")

    def as_tuple(self) -> tuple[float, float]:
        return (self.c1, self.c2)


@dataclass
class AdmissibilityReport:
    condition: str
    admissible: bool
    margins: dict[str, float] = field(default_factory=dict)
    nonstrict: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "admissible": self.admissible,
            "margins": dict(self.margins),
        }


def _report(mode: str, margins: dict[str, float], nonstrict: tuple[str, ...] = ()) -> AdmissibilityReport:
    ok = all(v >= 0 if k in nonstrict else v > 0 for k, v in margins.items())
    return AdmissibilityReport(mode, ok, margins, nonstrict)


def check_admissibility(
    params: ModelParams, masses: MassConstraint, cb: float | None = None, mode: str = "A1"
) -> AdmissibilityReport:
    """Evaluate one of the well-posedness / uniqueness conditions.

    Each margin is a slack that must be strictly positive, except the
    ``beta12`` bound of ``A1_prime`` and the semi-definiteness of ``A2``,
    which only need to be nonnegative.
    """
    if mode not in CONDITIONS:
        raise ValueError(f"unknown condition {mode!r}; expected one of {CONDITIONS}")
    need = _DIM_FOR_MODE.get(mode)
    if need is not None and params.dim != need:
        raise ValueError(f"condition {mode} applies to dim={need}, params have dim={params.dim}")
    if mode in ("A1", "A1_relaxed", "A1_prime"):
        if cb is None or not cb > 0:
            raise ValueError(f"condition {mode} needs a positive GN constant cb, got {cb}")

    b11, b12, b22 = params.beta11, params.beta12, params.beta22
    c1, c2 = masses.c1, masses.c2

    if mode in ("A1", "A1_relaxed"):
        margins = {}
        if mode == "A1":
            margins.update(beta11_neg=-b11, beta12_neg=-b12, beta22_neg=-b22)
        else:
            # nonnegative entries are dropped from the mass inequalities
            b11, b12, b22 = min(b11, 0.0), min(b12, 0.0), min(b22, 0.0)
        margins["row1"] = b11 * c1**2 + b12 * c1 * c2 + cb
        margins["row2"] = b22 * c2**2 + b12 * c1 * c2 + cb
        return _report(mode, margins)

    if mode == "A1_prime":
        s11, s22 = b11 + cb, b22 + cb
        margins = {"beta11": s11, "beta22": s22}
        if s11 > 0 and s22 > 0:
            margins["beta12"] = b12 + cb + math.sqrt(s11) * math.sqrt(s22)
        else:
            margins["beta12"] = -math.inf
        margins["total_mass"] = 1.0 - c1**2 - c2**2
        return _report(mode, margins, nonstrict=("beta12",))

    if mode == "A1_N3":
        return _report(mode, {"beta11": b11, "beta22": b22, "det": b11 * b22 - b12**2})

    if mode == "A1_prime_N3":
        return _report(mode, {"beta11": b11, "beta12": b12, "beta22": b22})

    # A2: beta positive semi-definite and at least one symmetry-breaking clause
    min_eig = float(np.linalg.eigvalsh(params.beta)[0])
    clause = max(abs(b11 - b22), abs(b11 - b12), abs(params.delta), abs(params.lam))
    return _report(mode, {"min_eigenvalue": min_eig, "asymmetry": clause}, nonstrict=("min_eigenvalue",))


def well_posedness(params: ModelParams, masses: MassConstraint, cb: float | None) -> AdmissibilityReport:
    """First supported condition that admits the problem, else the last one tried.

    In one dimension the quartic term is subcritical and every coefficient
    set is accepted.
    """
    if params.dim == 1:
        return AdmissibilityReport("N1", True, {})
    modes = ("A1_relaxed", "A1_prime") if params.dim == 2 else ("A1_N3", "A1_prime_N3")
    report = None
    for mode in modes:
        report = check_admissibility(params, masses, cb, mode)
        if report.admissible:
            return report
    return report


def energy_lower_bound(params: ModelParams, masses: MassConstraint, cb: float) -> float:
    """Mass-only lower bound on the real modulus energy under (relaxed) A1.

    With the gradient coefficients nonnegative, only the detuning and Rabi
    terms can pull the energy down: ``-|delta| c1^2 - 2|lam| c1 c2``.
    """
    report = check_admissibility(params, masses, cb, "A1_relaxed")
    if not report.admissible:
        raise AdmissibilityError(f"lower bound needs relaxed A1; margins {report.margins}")
    return -abs(params.delta) * masses.c1**2 - 2.0 * abs(params.lam) * masses.c1 * masses.c2

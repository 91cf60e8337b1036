"""Uniform periodic tensor grids with Fourier differentiation and quadrature.

Fields are plain numpy arrays shaped ``grid.shape``; the grid supplies the
spectral operators and the Sigma-norm ``|u|_2^2 + |grad u|_2^2 + ||x| u|_2^2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


def fft_workers() -> int:
    """Thread count for transforms, from ``GPE2_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("GPE2_THREADS", "1")))
    except ValueError:
        return 1


def _check_finite(f: np.ndarray) -> None:
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[-L, L)^dim`` sampled with ``points`` cells per axis.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    half_extent : float
        Half side length ``L`` of the box.
    points : int
        Cells per axis ``M``; a power of two, at least 8.
    """

    dim: int
    half_extent: float
    points: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not (self.half_extent > 0 and np.isfinite(self.half_extent)):
            raise ValueError(f"half_extent must be positive, got {self.half_extent}")
        m = int(self.points)
        if m < 8 or m & (m - 1):
            raise ValueError(f"points must be a power of two >= 8, got {self.points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Per-axis wavenumbers ``pi k / L`` in FFT order."""
        return 2.0 * np.pi * sfft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Dense coordinate arrays, one per axis (``indexing='ij'``)."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        """``|x|^2`` at every cell."""
        out = np.zeros(self.shape)
        for c in self.coords:
            out = out + c * c
        return out

    @cached_property
    def kvecs(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for k in self.kvecs:
            out = out + k * k
        return out

    @cached_property
    def _k2_half(self) -> np.ndarray:
        # |k|^2 on the rfftn half spectrum
        axes = [self.wavenumbers] * (self.dim - 1)
        axes.append(2.0 * np.pi * sfft.rfftfreq(self.points, d=self.spacing))
        out = 0.0
        for k in np.meshgrid(*axes, indexing="ij"):
            out = out + k * k
        return out

    @cached_property
    def _dk(self) -> tuple[np.ndarray, ...]:
        # first-derivative multipliers with the Nyquist mode removed
        k = self.wavenumbers.copy()
        k[self.points // 2] = 0.0
        return tuple(1j * kk for kk in np.meshgrid(*([k] * self.dim), indexing="ij"))

    # -- transforms -------------------------------------------------------

    def fft(self, f: np.ndarray) -> np.ndarray:
        return sfft.fftn(f, workers=fft_workers())

    def ifft(self, F: np.ndarray) -> np.ndarray:
        return sfft.ifftn(F, workers=fft_workers())

    def zeros(self, complex_: bool = False) -> np.ndarray:
        return np.zeros(self.shape, dtype=complex if complex_ else float)

    def check(self, f: np.ndarray) -> np.ndarray:
        """Validate shape and finiteness, returning ``f`` as an array."""
        f = np.asarray(f)
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")
        _check_finite(f)
        return f

    # -- quadrature and norms --------------------------------------------

    def integrate(self, f: np.ndarray) -> float | complex:
        """Riemann sum ``h^N sum f`` over the box."""
        f = self.check(f)
        return f.sum() * self.cell_volume

    def mass(self, f: np.ndarray) -> float:
        f = self.check(f)
        return float(np.vdot(f, f).real) * self.cell_volume

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """L2 inner product ``int f conj(g)``."""
        return np.vdot(g, f) * self.cell_volume

    def grad_norm_sq(self, f: np.ndarray) -> float:
        """``int |grad f|^2`` by Parseval on the transform."""
        f = self.check(f)
        if np.isrealobj(f):
            F = sfft.rfftn(f, workers=fft_workers())
            w = np.full(F.shape[-1], 2.0)
            w[0] = 1.0
            if self.points % 2 == 0:
                w[-1] = 1.0
            s = np.sum(w * self._k2_half * (F.real**2 + F.imag**2))
        else:
            F = self.fft(f)
            s = np.sum(self.k2 * (F.real**2 + F.imag**2))
        return float(s) * self.cell_volume / self.size

    def moment_sq(self, f: np.ndarray) -> float:
        """``int |x|^2 |f|^2``."""
        f = self.check(f)
        return float(np.sum(self.r2 * np.abs(f) ** 2)) * self.cell_volume

    def sigma_norm_sq(self, f: np.ndarray) -> float:
        """Squared Sigma-norm: mass + gradient + second moment."""
        return self.mass(f) + self.grad_norm_sq(f) + self.moment_sq(f)

    def sigma_inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Sigma inner product ``int f g* + grad f . grad g* + |x|^2 f g*``."""
        f = self.check(f)
        g = self.check(g)
        F = self.fft(f)
        G = self.fft(g)
        grad = np.vdot(G, self.k2 * F) / self.size
        return (np.vdot(g, f) + np.vdot(g, self.r2 * f) + grad) * self.cell_volume

    # -- differential operators ------------------------------------------

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Spectral Laplacian (no 1/2 factor)."""
        f = self.check(f)
        if np.isrealobj(f):
            F = sfft.rfftn(f, workers=fft_workers())
            return sfft.irfftn(-self._k2_half * F, s=self.shape, workers=fft_workers())
        return self.ifft(-self.k2 * self.fft(f))

    def gradient(self, f: np.ndarray) -> list[np.ndarray]:
        """Spectral partial derivatives, Nyquist mode dropped."""
        f = self.check(f)
        F = self.fft(f)
        out = [self.ifft(d * F) for d in self._dk]
        if np.isrealobj(f):
            out = [g.real for g in out]
        return out

    def solve_helmholtz(self, f: np.ndarray, a: float, b: float) -> np.ndarray:
        """Return ``u`` with ``(a - b Laplacian) u = f`` (``a > 0``, ``b >= 0``)."""
        if np.isrealobj(f):
            F = sfft.rfftn(f, workers=fft_workers())
            return sfft.irfftn(F / (a + b * self._k2_half), s=self.shape, workers=fft_workers())
        return self.ifft(self.fft(f) / (a + b * self.k2))


def default_grid(dim: int, gamma: float = 1.0, points: int = 64, scale: float = 8.0) -> Grid:
    """Box sized so the trap ground state is negligible at the edge (``L = scale/sqrt(gamma)``)."""
    return Grid(dim, scale / np.sqrt(gamma), points)


def gaussian(grid: Grid, gamma: float = 1.0, mass: float = 1.0) -> np.ndarray:
    """Harmonic-oscillator ground state with prescribed mass."""
    amp = (gamma / np.pi) ** (grid.dim / 4.0)
    return np.sqrt(mass) * amp * np.exp(-0.5 * gamma * grid.r2)


@dataclass(frozen=True)
class FieldPair:
    """Two components on one grid, both real or both complex."""

    grid: Grid
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self) -> None:
        u1 = self.grid.check(self.u1)
        u2 = self.grid.check(self.u2)
        if np.iscomplexobj(u1) != np.iscomplexobj(u2):
            u1, u2 = u1.astype(complex), u2.astype(complex)
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u2)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.u1)

    def __iter__(self):
        return iter((self.u1, self.u2))

    def masses(self) -> tuple[float, float]:
        return self.grid.mass(self.u1), self.grid.mass(self.u2)

    def total_mass(self) -> float:
        return sum(self.masses())

    def sigma_norm_sq(self) -> float:
        """Cartesian Sigma-norm squared of the pair."""
        return self.grid.sigma_norm_sq(self.u1) + self.grid.sigma_norm_sq(self.u2)

    def sigma_norm(self) -> float:
        return float(np.sqrt(self.sigma_norm_sq()))

    def modulus(self) -> FieldPair:
        return FieldPair(self.grid, np.abs(self.u1), np.abs(self.u2))

    def as_complex(self) -> FieldPair:
        return FieldPair(self.grid, self.u1.astype(complex), self.u2.astype(complex))

    def conj(self) -> FieldPair:
        return FieldPair(self.grid, np.conj(self.u1), np.conj(self.u2))

    def same_grid(self, other: FieldPair) -> None:
        if self.grid != other.grid:
            raise ValueError("field pairs live on different grids")

    def distance_sigma(self, other: FieldPair) -> float:
        self.same_grid(other)
        d = FieldPair(self.grid, self.u1 - other.u1, self.u2 - other.u2)
        return d.sigma_norm()

"""Wavefunctions on the grid and their spectral (eigenbasis) evolution.

Time stepping happens entirely in the eigenbasis: coefficients pick up
phases exp(-i E_n dt), which is exact for any dt in the retained subspace.
The probability mass lost to truncation ("deficit") is tracked, gated at
construction, and only folded back in when reconstructing on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grids import HBAR, EigenSystem, SpatialGrid

DEFAULT_DEFICIT_THRESHOLD = 1e-3


class TruncationError(ValueError):
    """Projection lost more probability mass than the configured threshold."""


@dataclass
class Wavefunction:
    amplitudes: np.ndarray
    grid: SpatialGrid

    def norm(self) -> float:
        a = self.amplitudes
        return float(np.sqrt(np.sum(a.real**2 + a.imag**2) * self.grid.dx))

    def density(self) -> np.ndarray:
        a = self.amplitudes
        return a.real**2 + a.imag**2


@dataclass
class SpectralState:
    coefficients: np.ndarray
    eigensystem: EigenSystem
    deficit: float = 0.0

    def norm_sq(self) -> float:
        c = self.coefficients
        return float(np.sum(c.real**2 + c.imag**2))

    def copy(self) -> "SpectralState":
        return SpectralState(self.coefficients.copy(), self.eigensystem, self.deficit)


def gaussian_packet(grid: SpatialGrid, center: float, sigma: float) -> Wavefunction:
    """Normalized real Gaussian exp(-(x-center)^2 / 4 sigma^2) on the grid."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not (grid.x_min < center < grid.x_max):
        raise ValueError(f"center {center} outside grid ({grid.x_min}, {grid.x_max})")
    x = grid.x
    amp = np.exp(-((x - center) ** 2) / (4.0 * sigma * sigma))
    amp = amp / np.sqrt(np.sum(amp * amp) * grid.dx)
    return Wavefunction(amp.astype(np.complex128), grid)


def to_spectral(
    psi: Wavefunction,
    es: EigenSystem,
    deficit_threshold: float = DEFAULT_DEFICIT_THRESHOLD,
) -> SpectralState:
    """Project onto the retained eigenbasis, keeping the truncation deficit.

    Raises TruncationError when the retained modes miss more than
    deficit_threshold of the probability mass.
    """
    if psi.grid.key() != es.grid.key():
        raise ValueError("wavefunction and eigensystem live on different grids")
    a = psi.amplitudes
    coeffs = (
        kernels.project_real(es.states, np.ascontiguousarray(a.real), es.grid.dx)
        + 1j * kernels.project_real(es.states, np.ascontiguousarray(a.imag), es.grid.dx)
    )
    deficit = 1.0 - float(np.sum(coeffs.real**2 + coeffs.imag**2))
    if deficit > deficit_threshold:
        raise TruncationError(
            f"truncation deficit {deficit:.3e} exceeds threshold {deficit_threshold:.1e}; "
            f"increase n_kept ({es.n_kept} modes retained)"
        )
    return SpectralState(coeffs, es, deficit)


def evolve(state: SpectralState, dt: float) -> SpectralState:
    """Unitary step: c_n <- c_n exp(-i E_n dt / hbar).  Exact for any dt >= 0."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    phases = np.exp(-1j * state.eigensystem.energies * (dt / HBAR))
    return SpectralState(state.coefficients * phases, state.eigensystem, state.deficit)


def to_position(state: SpectralState) -> tuple[Wavefunction, float]:
    """Reconstruct psi = sum c_n v_n on the grid, renormalized.

    Returns (wavefunction, renormalization factor); the factor is the norm
    of the raw reconstruction, i.e. sqrt(1 - deficit) for a fresh projection.
    """
    es = state.eigensystem
    psi = kernels.reconstruct(es.states, state.coefficients)
    factor = float(np.sqrt(np.sum(psi.real**2 + psi.imag**2) * es.grid.dx))
    if factor > 0:
        psi = psi / factor
    return Wavefunction(psi, es.grid), factor


def expected_energy(state: SpectralState) -> float:
    """<E> = sum |c_n|^2 E_n / sum |c_n|^2 in the retained basis."""
    c = state.coefficients
    w = c.real**2 + c.imag**2
    return float(np.sum(w * state.eigensystem.energies) / np.sum(w))


def overlap(a: SpectralState, b: SpectralState) -> complex:
    """<a|b> computed in spectral coefficients (shared eigensystem)."""
    if a.eigensystem is not b.eigensystem and not np.array_equal(
        a.eigensystem.energies, b.eigensystem.energies
    ):
        raise ValueError("states expanded in different eigensystems")
    return complex(np.vdot(a.coefficients, b.coefficients))

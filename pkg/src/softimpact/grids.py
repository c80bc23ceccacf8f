"""Spatial grid, potentials, finite-difference Hamiltonian and its eigenbasis.

The Hamiltonian is discretized with second-order central differences on a
uniform grid with Dirichlet boundaries, giving a real symmetric tridiagonal
matrix.  All inner products downstream are dx-weighted, so eigenvectors are
normalized such that sum(v**2) * dx == 1.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal

HBAR = 1.0

EIGEN_CACHE_VERSION = 1

# relative residual / orthonormality tolerance for a retained eigenpair
EIGEN_TOL = 1e-8


class EigenSolverError(RuntimeError):
    """Raised when the tridiagonal eigensolver fails to converge."""


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform 1-D grid on [x_min, x_max] with n_points points."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_points < 3:
            raise ValueError(f"need n_points >= 3, got {self.n_points}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    def key(self) -> tuple:
        return (self.x_min, self.x_max, self.n_points)


def build_grid(x_min: float, x_max: float, n_points: int) -> SpatialGrid:
    return SpatialGrid(float(x_min), float(x_max), int(n_points))


@dataclass(frozen=True)
class SoftImpact:
    """Harmonic well of stiffness k1 plus a cushioned wall of stiffness k2.

    V(x) = k1 x^2 / 2                          for x <= x_wall
         = k1 x^2 / 2 + k2 (x - x_wall)^2 / 2  for x >= x_wall

    Both branches agree at x_wall, so the potential is continuous.
    """

    k1: float
    k2: float
    x_wall: float

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if self.k2 < 0:
            raise ValueError(f"k2 must be >= 0, got {self.k2}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        excess = np.maximum(x - self.x_wall, 0.0)
        return 0.5 * self.k1 * x * x + 0.5 * self.k2 * excess * excess

    def key(self) -> tuple:
        return ("soft_impact", self.k1, self.k2, self.x_wall)


@dataclass(frozen=True)
class Harmonic:
    """Translated harmonic well V(x) = k (x - center)^2 / 2."""

    k: float
    center: float = 0.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"k must be > 0, got {self.k}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.k * (x - self.center) ** 2

    def key(self) -> tuple:
        return ("harmonic", self.k, self.center)


Potential = SoftImpact | Harmonic


def evaluate_potential(potential: Potential, grid: SpatialGrid) -> np.ndarray:
    return potential(grid.x)


def discretize_hamiltonian(potential: Potential, grid: SpatialGrid, mass: float = 1.0):
    """Return (diagonal, off_diagonal) of the symmetric tridiagonal Hamiltonian.

    Kinetic term via second-order central differences; psi is taken to vanish
    outside the grid (Dirichlet).
    """
    if mass <= 0:
        raise ValueError(f"mass must be > 0, got {mass}")
    dx = grid.dx
    t = HBAR * HBAR / (mass * dx * dx)
    diag = t + evaluate_potential(potential, grid)
    off = np.full(grid.n_points - 1, -0.5 * t)
    return diag, off


@dataclass(frozen=True)
class EigenSystem:
    """Lowest n_kept eigenpairs of a discretized Hamiltonian.

    states[:, n] is the n-th eigenvector, normalized under the dx-weighted
    inner product; energies are strictly ascending.
    """

    energies: np.ndarray
    states: np.ndarray  # shape (n_points, n_kept), C-contiguous
    grid: SpatialGrid
    mass: float = 1.0

    @property
    def n_kept(self) -> int:
        return len(self.energies)

    def project(self, values: np.ndarray) -> np.ndarray:
        """dx-weighted projection of a grid function onto the retained basis."""
        return (values @ self.states) * self.grid.dx


def solve_tridiagonal(diag: np.ndarray, off: np.ndarray, n_kept: int):
    """Lowest n_kept eigenpairs of a real symmetric tridiagonal matrix.

    Wraps LAPACK's bisection + inverse-iteration solver; non-convergence
    surfaces as EigenSolverError.  Eigenvectors have unit Euclidean norm.
    """
    if n_kept < 1 or n_kept > len(diag):
        raise ValueError(f"n_kept must be in [1, {len(diag)}], got {n_kept}")
    try:
        return eigh_tridiagonal(diag, off, select="i", select_range=(0, n_kept - 1))
    except np.linalg.LinAlgError as err:  # pragma: no cover - LAPACK failure
        raise EigenSolverError(f"tridiagonal eigensolver did not converge: {err}")


def eigensolve(
    potential: Potential,
    grid: SpatialGrid,
    mass: float = 1.0,
    n_kept: int = 150,
) -> EigenSystem:
    """Diagonalize the finite-difference Hamiltonian, keeping n_kept modes."""
    diag, off = discretize_hamiltonian(potential, grid, mass)
    energies, states = solve_tridiagonal(diag, off, n_kept)
    # LAPACK normalizes to unit Euclidean norm; rescale to the dx-weighted norm
    states = np.ascontiguousarray(states / np.sqrt(grid.dx))
    # fix sign convention so results are reproducible across LAPACK builds
    for n in range(states.shape[1]):
        i = np.argmax(np.abs(states[:, n]))
        if states[i, n] < 0:
            states[:, n] = -states[:, n]
    return EigenSystem(energies=energies, states=states, grid=grid, mass=mass)


def residuals(es: EigenSystem, potential: Potential) -> np.ndarray:
    """Relative residuals ||H v - E v|| / ||v|| in the dx-weighted norm."""
    diag, off = discretize_hamiltonian(potential, es.grid, es.mass)
    v = es.states
    hv = diag[:, None] * v
    hv[1:] += off[:, None] * v[:-1]
    hv[:-1] += off[:, None] * v[1:]
    num = np.sqrt(np.sum((hv - es.energies[None, :] * v) ** 2, axis=0))
    den = np.sqrt(np.sum(v * v, axis=0))
    return num / den


# --- eigensystem cache ------------------------------------------------------
#
# Layout: <cache_dir>/<key>.npz with arrays energies/states plus a JSON
# metadata blob.  The key is a content hash of (potential, grid, mass,
# n_kept, cache version), so any parameter change misses cleanly.


def eigensystem_cache_key(
    potential: Potential, grid: SpatialGrid, mass: float, n_kept: int
) -> str:
    payload = json.dumps(
        {
            "version": EIGEN_CACHE_VERSION,
            "potential": potential.key(),
            "grid": grid.key(),
            "mass": mass,
            "n_kept": n_kept,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def cached_eigensolve(
    potential: Potential,
    grid: SpatialGrid,
    mass: float = 1.0,
    n_kept: int = 150,
    cache_dir: str | Path | None = None,
) -> EigenSystem:
    """eigensolve() with an optional on-disk cache.

    One decomposition is amortized over every trajectory in an ensemble, so
    the cache mostly matters across separate CLI invocations.
    """
    if cache_dir is None:
        return eigensolve(potential, grid, mass, n_kept)
    cache_dir = Path(cache_dir)
    key = eigensystem_cache_key(potential, grid, mass, n_kept)
    path = cache_dir / f"eigen_{key}.npz"
    if path.exists():
        with np.load(path) as data:
            return EigenSystem(
                energies=data["energies"],
                states=np.ascontiguousarray(data["states"]),
                grid=grid,
                mass=mass,
            )
    es = eigensolve(potential, grid, mass, n_kept)
    cache_dir.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, energies=es.energies, states=es.states)
    tmp.replace(path)
    return es

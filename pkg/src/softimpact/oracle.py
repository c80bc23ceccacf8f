"""Closed-form energetics of Gaussian packets in translated harmonic wells.

For psi(x) = (2 pi sigma^2)^(-1/4) exp(-(x-a)^2 / 4 sigma^2) in
V(x) = k (x-c)^2 / 2 the expected energy is

    <E> = (k/2) [ sigma^2 + (a-c)^2 + hbar^2 / (4 m k sigma^2) ]

Everything else here follows from inverting that identity: which widths
realize a prescribed energy at a given center, where such centers exist at
all, and how a total energy may be split between two wells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import HBAR

# discriminants closer to zero than this are treated as a double root
DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class GaussianPacket:
    center: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class OscillatorSpec:
    mass: float
    k: float
    center: float = 0.0

    def __post_init__(self):
        if self.mass <= 0 or self.k <= 0:
            raise ValueError(f"need mass, k > 0, got m={self.mass}, k={self.k}")

    @property
    def omega(self) -> float:
        return np.sqrt(self.k / self.mass)

    @property
    def ground_energy(self) -> float:
        return 0.5 * HBAR * self.omega

    @property
    def ground_sigma_sq(self) -> float:
        return 0.5 * HBAR / np.sqrt(self.mass * self.k)

    def energy_floor(self, a: float) -> float:
        """Minimum expected energy of any Gaussian centered at a."""
        return 0.5 * self.k * (a - self.center) ** 2 + self.ground_energy


def expected_energy_gaussian(packet: GaussianPacket, osc: OscillatorSpec) -> float:
    d = packet.center - osc.center
    s2 = packet.sigma * packet.sigma
    return 0.5 * osc.k * (s2 + d * d + HBAR * HBAR / (4.0 * osc.mass * osc.k * s2))


def variance_roots(epsilon: float, a: float, osc: OscillatorSpec) -> list[float]:
    """Variances sigma^2 of Gaussians at center a with expected energy epsilon.

    Solving the energy identity for sigma^2 gives a quadratic with roots

        sigma^2 = [B +- sqrt(B^2 - hbar^2/(m k))] / 2,
        B = 2 epsilon / k - (a - c)^2.

    Returns [] (infeasible), one value (double root) or two, ascending.
    Each root reproduces epsilon exactly since the roots satisfy
    s_small * s_large = hbar^2/(4 m k) and s_small + s_large = B.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    b = 2.0 * epsilon / osc.k - (a - osc.center) ** 2
    disc = b * b - HBAR * HBAR / (osc.mass * osc.k)
    if abs(disc) < DEGENERATE_EPS:
        return [0.5 * b] if b > 0 else []
    if disc < 0 or b <= 0:
        return []
    root = np.sqrt(disc)
    return [0.5 * (b - root), 0.5 * (b + root)]


def allowed_domain(epsilon: float, osc: OscillatorSpec) -> tuple[float, float] | None:
    """Interval of centers a for which variance_roots is non-empty.

    Feasibility needs B >= hbar/sqrt(m k), i.e. |a - c| <= R with
    R = sqrt(2 epsilon / k - hbar / sqrt(m k)).  Below the ground-state
    energy no center works and None is returned.
    """
    r_sq = 2.0 * epsilon / osc.k - HBAR / np.sqrt(osc.mass * osc.k)
    if r_sq < 0:
        return None
    r = np.sqrt(r_sq)
    return (osc.center - r, osc.center + r)


def partition_energy(
    total: float, osc1: OscillatorSpec, osc2: OscillatorSpec, rng: np.random.Generator
) -> tuple[float, float]:
    """Uniform random split of `total` with each share above its ground energy."""
    lo = osc1.ground_energy
    hi = total - osc2.ground_energy
    if hi < lo:
        raise ValueError(
            f"total energy {total} below the ground floor {lo + osc2.ground_energy}"
        )
    e1 = lo + rng.random() * (hi - lo)
    return e1, total - e1


def constant_energy_curve(
    epsilon: float, osc: OscillatorSpec, n_samples: int = 401
) -> np.ndarray:
    """Sampled locus of (a, sigma_small, sigma_large) at fixed energy.

    Rows span the allowed domain of a; at the endpoints the two branches
    coalesce.  Infeasible epsilon gives an empty array.
    """
    domain = allowed_domain(epsilon, osc)
    if domain is None:
        return np.empty((0, 3))
    a_vals = np.linspace(domain[0], domain[1], n_samples)
    rows = []
    for a in a_vals:
        roots = variance_roots(epsilon, a, osc)
        if not roots:
            continue
        small = np.sqrt(roots[0])
        large = np.sqrt(roots[-1])
        rows.append((a, small, large))
    return np.array(rows).reshape(-1, 3)

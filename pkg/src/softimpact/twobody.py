"""Two non-interacting oscillators with simultaneous energy-conserving collapse.

The joint state stays a product psi1(x1) psi2(x2); each factor evolves in its
own eigenbasis.  Per step, the density overlap Int |psi1|^2 |psi2|^2 dx sets
the collapse probability.  A collapse relocalizes both particles to Gaussians
at a common sampled point, with widths chosen so that either each particle's
expected energy (protocol "individual") or the total (protocol "total") is
preserved.

Width selection starts from the closed-form variance roots and, by default,
is refined against the energy of the actually projected, truncated packet,
so conservation holds on the grid and not just in the continuum formulas
(energy_match="grid"; set "analytic" to use the raw roots).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .grids import EigenSystem, SpatialGrid
from .oracle import OscillatorSpec, variance_roots
from .states import SpectralState, Wavefunction, expected_energy, to_spectral

TWO_BODY_EVENT_COLUMNS = (
    "step",
    "time",
    "location",
    "e1_pre",
    "e1_post",
    "e2_pre",
    "e2_post",
)

ENERGY_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class CollapseProtocol:
    variant: str  # "individual" or "total"
    sigma_choice: str = "smaller"
    sampling_density: str = "product"  # or "psi1" / "psi2"
    coupling: float = 1.0  # lambda multiplying the density overlap
    energy_match: str = "grid"  # or "analytic"
    max_retries: int = 16

    def __post_init__(self):
        if self.variant not in ("individual", "total"):
            raise ValueError(f"unknown protocol variant {self.variant!r}")
        if self.sigma_choice not in ("smaller", "larger"):
            raise ValueError(f"unknown sigma_choice {self.sigma_choice!r}")
        if self.sampling_density not in ("product", "psi1", "psi2"):
            raise ValueError(f"unknown sampling_density {self.sampling_density!r}")
        if self.coupling < 0:
            raise ValueError("coupling must be >= 0")
        if self.energy_match not in ("grid", "analytic"):
            raise ValueError(f"unknown energy_match {self.energy_match!r}")


@dataclass
class TwoParticleState:
    psi1: SpectralState
    psi2: SpectralState
    e1: float
    e2: float

    @property
    def total_energy(self) -> float:
        return self.e1 + self.e2


@dataclass(frozen=True)
class TwoBodyEvent:
    step_index: int
    time: float
    location: float
    e1_pre: float
    e1_post: float
    e2_pre: float
    e2_post: float
    sigma1: float
    sigma2: float


@dataclass
class TwoBodyRunResult:
    t: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    pdf1: np.ndarray
    pdf2: np.ndarray
    events: list[TwoBodyEvent]
    skipped_events: int
    final: TwoParticleState
    grid: SpatialGrid = field(repr=False)

    @property
    def e_total(self) -> np.ndarray:
        return self.e1 + self.e2


def density_overlap(psi1: Wavefunction, psi2: Wavefunction) -> float:
    """Int |psi1|^2 |psi2|^2 dx for normalized states on a shared grid."""
    if psi1.grid.key() != psi2.grid.key():
        raise ValueError("density_overlap requires a common grid")
    dx = psi1.grid.dx
    r1 = psi1.density()
    r2 = psi2.density()
    r1 = r1 / (np.sum(r1) * dx)
    r2 = r2 / (np.sum(r2) * dx)
    return float(np.sum(r1 * r2) * dx)


def _windowed_density(states, coeffs, x, center, sigma):
    """|psi|^2 of a freshly collapsed packet, evaluated only on its support.

    Outside [center - 20 sigma, center + 20 sigma] the packet amplitude is
    below 1e-43 plus truncation ripples, negligible for every accumulated
    statistic.
    """
    rho = np.zeros(len(x))
    lo = int(np.searchsorted(x, center - 20.0 * sigma))
    hi = min(int(np.searchsorted(x, center + 20.0 * sigma)) + 1, len(x))
    rho[lo:hi] = kernels.density(states[lo:hi], coeffs)
    return rho


def collapse_location(
    weights: np.ndarray,
    x: np.ndarray,
    domain: tuple[float, float],
    rng: np.random.Generator,
) -> float | None:
    """Born-rule sample of `weights` restricted to `domain`, on the grid.

    Returns None when the domain carries no probability mass (the caller
    should skip the collapse).
    """
    a_min, a_max = domain
    mask = (x >= a_min) & (x <= a_max)
    w = np.where(mask, weights, 0.0)
    total = float(np.sum(w))
    if total <= 0.0:
        return None
    csum = np.cumsum(w)
    idx = int(np.searchsorted(csum, rng.random() * total, side="right"))
    return float(x[min(idx, len(x) - 1)])


class TwoParticleEngine:
    """Holds the two oscillator channels and applies the collapse protocols."""

    def __init__(
        self,
        osc1: OscillatorSpec,
        es1: EigenSystem,
        osc2: OscillatorSpec,
        es2: EigenSystem,
    ):
        if es1.grid.key() != es2.grid.key():
            raise ValueError("both particles must share one spatial grid")
        self.osc1, self.es1 = osc1, es1
        self.osc2, self.es2 = osc2, es2
        self.grid = es1.grid

    # -- packet construction --------------------------------------------

    def _projected_packet(self, es: EigenSystem, a: float, sigma: float):
        """Project a normalized Gaussian(a, sigma); return (coeffs, energy, deficit).

        Coefficients are renormalized; energy is that of the truncated,
        renormalized packet, which is what the run tracks.  The projection is
        windowed to [a - 20 sigma, a + 20 sigma]: the amplitude outside is
        below 1e-43, far under every tolerance in play, and the window keeps
        the root-finding in sigma cheap.
        """
        x = self.grid.x
        dx = self.grid.dx
        lo = int(np.searchsorted(x, a - 20.0 * sigma))
        hi = min(int(np.searchsorted(x, a + 20.0 * sigma)) + 1, len(x))
        g = np.exp(-((x[lo:hi] - a) ** 2) / (4.0 * sigma * sigma))
        g /= np.sqrt(np.sum(g * g) * dx)
        c = kernels.project_real(es.states[lo:hi], g, dx)
        norm2 = float(np.sum(c * c))
        deficit = 1.0 - norm2
        c = c / np.sqrt(norm2)
        energy = float(np.sum(c * c * es.energies))
        return c, energy, deficit

    def _grid_floor(self, es: EigenSystem, osc: OscillatorSpec, a: float) -> float:
        """Minimum reachable packet energy at center a, on this grid.

        The finite-difference correction to a minimal-width packet is center
        independent, so the floor is the analytic quadratic shifted onto the
        grid ground energy.  Using grid floors keeps at-the-floor collapses
        (forced ground states) feasible for grid-tracked energies.
        """
        return 0.5 * osc.k * (a - osc.center) ** 2 + float(es.energies[0])

    def _matched_packet(
        self,
        es: EigenSystem,
        osc: OscillatorSpec,
        a: float,
        epsilon: float,
        protocol: CollapseProtocol,
    ):
        """Gaussian at a whose projected energy is epsilon (see module docstring).

        Returns (coeffs, sigma, achieved_energy, deficit) or None when epsilon
        is infeasible at this center.
        """
        roots = variance_roots(epsilon, a, osc)
        sigma_star = float(np.sqrt(osc.ground_sigma_sq))
        if roots:
            sigma0 = float(
                np.sqrt(roots[0] if protocol.sigma_choice == "smaller" else roots[-1])
            )
        elif epsilon >= self._grid_floor(es, osc, a) - 1e-9:
            # between the grid floor and the analytic floor the continuum
            # curve has no root but the grid curve still does, at the
            # branch turning point
            sigma0 = sigma_star
        else:
            return None
        if protocol.energy_match == "analytic":
            c, energy, deficit = self._projected_packet(es, a, sigma0)
            return c, sigma0, energy, deficit
        sigma = self._refine_sigma(es, osc, a, epsilon, sigma0, protocol.sigma_choice)
        c, energy, deficit = self._projected_packet(es, a, sigma)
        return c, sigma, energy, deficit

    def _refine_sigma(self, es, osc, a, epsilon, sigma0, branch):
        """Root of (projected energy)(sigma) = epsilon near the analytic root.

        Secant iteration converges in a handful of projections since the
        grid correction is small and smooth; a bracketed solve backs it up
        when the iterates leave the branch.
        """

        def f(sigma):
            return self._projected_packet(es, a, sigma)[1] - epsilon

        sigma_star = float(np.sqrt(osc.ground_sigma_sq))  # branch turning point
        if branch == "smaller":
            lo_lim, hi_lim = 1e-3 * sigma0, sigma_star
        else:
            lo_lim, hi_lim = sigma_star, 64.0 * sigma0
        tol = 1e-10 * max(1.0, abs(epsilon))

        s_prev, f_prev = sigma0, f(sigma0)
        if abs(f_prev) <= tol:
            return s_prev
        s_cur = min(max(sigma0 * 1.001, lo_lim), hi_lim)
        f_cur = f(s_cur)
        for _ in range(24):
            if abs(f_cur) <= tol:
                return s_cur
            if f_cur == f_prev:
                break
            s_next = s_cur - f_cur * (s_cur - s_prev) / (f_cur - f_prev)
            if not np.isfinite(s_next) or not lo_lim < s_next < hi_lim:
                break
            s_prev, f_prev = s_cur, f_cur
            s_cur, f_cur = s_next, f(s_next)

        # secant left the branch or stalled: fall back to a bracketed solve
        for widen in (1.05, 1.5, 4.0):
            if branch == "smaller":
                lo, hi = sigma0 / widen, min(sigma0 * widen, sigma_star)
            else:
                lo, hi = max(sigma0 / widen, sigma_star), sigma0 * widen
            if lo >= hi:
                continue
            f_lo, f_hi = f(lo), f(hi)
            if f_lo == 0.0:
                return lo
            if f_hi == 0.0:
                return hi
            if f_lo * f_hi < 0:
                return float(brentq(f, lo, hi, xtol=1e-13, rtol=1e-14, maxiter=200))
        return sigma0

    # -- allowed collapse domains ----------------------------------------

    def individual_domain(self, state: TwoParticleState) -> tuple[float, float] | None:
        """Centers where both particles can keep their own energy."""
        from .oracle import allowed_domain

        d1 = allowed_domain(state.e1, self.osc1)
        d2 = allowed_domain(state.e2, self.osc2)
        if d1 is None or d2 is None:
            return None
        lo, hi = max(d1[0], d2[0]), min(d1[1], d2[1])
        return (lo, hi) if lo <= hi else None

    def total_domain(self, state: TwoParticleState) -> tuple[float, float] | None:
        """Centers where some split of the total energy is feasible for both.

        Needs floor1(a) + floor2(a) <= E_total with the grid floors
        floor_i(a) = k_i (a - c_i)^2 / 2 + E0_i, a quadratic inequality in a.
        """
        e_tot = state.total_energy
        k1, c1 = self.osc1.k, self.osc1.center
        k2, c2 = self.osc2.k, self.osc2.center
        # (k1+k2)/2 a^2 - (k1 c1 + k2 c2) a + k1 c1^2/2 + k2 c2^2/2 + E0s - E <= 0
        qa = 0.5 * (k1 + k2)
        qb = -(k1 * c1 + k2 * c2)
        qc = (
            0.5 * (k1 * c1 * c1 + k2 * c2 * c2)
            + float(self.es1.energies[0])
            + float(self.es2.energies[0])
            - e_tot
        )
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0:
            return None
        root = np.sqrt(disc)
        return ((-qb - root) / (2 * qa), (-qb + root) / (2 * qa))

    # -- collapse application --------------------------------------------

    def collapse_individual(
        self, state: TwoParticleState, a: float, protocol: CollapseProtocol
    ) -> tuple[TwoParticleState, TwoBodyEvent] | None:
        m1 = self._matched_packet(self.es1, self.osc1, a, state.e1, protocol)
        m2 = self._matched_packet(self.es2, self.osc2, a, state.e2, protocol)
        if m1 is None or m2 is None:
            return None
        c1, s1, e1_post, d1 = m1
        c2, s2, e2_post, d2 = m2
        new = TwoParticleState(
            psi1=SpectralState(c1.astype(np.complex128), self.es1, d1),
            psi2=SpectralState(c2.astype(np.complex128), self.es2, d2),
            e1=e1_post,
            e2=e2_post,
        )
        event = TwoBodyEvent(0, 0.0, a, state.e1, e1_post, state.e2, e2_post, s1, s2)
        return new, event

    def collapse_total(
        self,
        state: TwoParticleState,
        a: float,
        protocol: CollapseProtocol,
        rng: np.random.Generator,
    ) -> tuple[TwoParticleState, TwoBodyEvent] | None:
        e_tot = state.total_energy
        lo = self._grid_floor(self.es1, self.osc1, a)
        hi = e_tot - self._grid_floor(self.es2, self.osc2, a)
        if hi < lo:
            return None
        e1_new = lo + rng.random() * (hi - lo)
        e2_new = e_tot - e1_new
        m1 = self._matched_packet(self.es1, self.osc1, a, e1_new, protocol)
        m2 = self._matched_packet(self.es2, self.osc2, a, e2_new, protocol)
        if m1 is None or m2 is None:
            return None
        c1, s1, e1_post, d1 = m1
        c2, s2, e2_post, d2 = m2
        new = TwoParticleState(
            psi1=SpectralState(c1.astype(np.complex128), self.es1, d1),
            psi2=SpectralState(c2.astype(np.complex128), self.es2, d2),
            e1=e1_post,
            e2=e2_post,
        )
        event = TwoBodyEvent(0, 0.0, a, state.e1, e1_post, state.e2, e2_post, s1, s2)
        return new, event

    # -- full run ----------------------------------------------------------

    def initial_state(
        self, a0_1: float, a0_2: float, sigma0: float
    ) -> TwoParticleState:
        from .states import gaussian_packet

        s1 = to_spectral(gaussian_packet(self.grid, a0_1, sigma0), self.es1)
        s2 = to_spectral(gaussian_packet(self.grid, a0_2, sigma0), self.es2)
        return TwoParticleState(s1, s2, expected_energy(s1), expected_energy(s2))

    def run(
        self,
        initial: TwoParticleState,
        dt: float,
        n_steps: int,
        protocol: CollapseProtocol | None,
        seed: int,
        stream: int = 0,
    ) -> TwoBodyRunResult:
        """Evolve both particles, triggering collapses from the density overlap.

        Per step the trigger probability is clamp(coupling * overlap, 0, 1);
        one uniform draw is consumed every step so the trigger sequence is
        reproducible, then event handling draws location (and for the total
        protocol, partition) values as needed.
        """
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((seed, stream)))
        )
        grid = self.grid
        dx = grid.dx
        x = grid.x
        c1 = np.array(initial.psi1.coefficients, dtype=np.complex128)
        c2 = np.array(initial.psi2.coefficients, dtype=np.complex128)
        e1 = initial.e1
        e2 = initial.e2
        ph1 = np.exp(-1j * self.es1.energies * dt)
        ph2 = np.exp(-1j * self.es2.energies * dt)
        v1, v2 = self.es1.states, self.es2.states

        e1_trace = np.empty(n_steps + 1)
        e2_trace = np.empty(n_steps + 1)
        e1_trace[0], e2_trace[0] = e1, e2
        pdf1 = np.zeros(grid.n_points)
        pdf2 = np.zeros(grid.n_points)
        events: list[TwoBodyEvent] = []
        skipped = 0
        state = TwoParticleState(
            SpectralState(c1, self.es1, initial.psi1.deficit),
            SpectralState(c2, self.es2, initial.psi2.deficit),
            e1,
            e2,
        )

        for k in range(1, n_steps + 1):
            c1 *= ph1
            c2 *= ph2
            rho1 = kernels.density(v1, c1)
            rho2 = kernels.density(v2, c2)
            n1 = float(np.sum(c1.real**2 + c1.imag**2))
            n2 = float(np.sum(c2.real**2 + c2.imag**2))
            overlap = float(np.sum(rho1 * rho2)) * dx / (n1 * n2)
            p_trigger = min(1.0, protocol.coupling * overlap) if protocol else 0.0

            if protocol is not None and rng.random() < p_trigger:
                state = TwoParticleState(
                    SpectralState(c1, self.es1, state.psi1.deficit),
                    SpectralState(c2, self.es2, state.psi2.deficit),
                    e1,
                    e2,
                )
                outcome = self._attempt_collapse(state, rho1, rho2, protocol, rng)
                if outcome is None:
                    skipped += 1
                else:
                    state, event = outcome
                    events.append(
                        TwoBodyEvent(
                            step_index=k,
                            time=k * dt,
                            location=event.location,
                            e1_pre=event.e1_pre,
                            e1_post=event.e1_post,
                            e2_pre=event.e2_pre,
                            e2_post=event.e2_post,
                            sigma1=event.sigma1,
                            sigma2=event.sigma2,
                        )
                    )
                    c1 = np.asarray(state.psi1.coefficients)
                    c2 = np.asarray(state.psi2.coefficients)
                    e1, e2 = state.e1, state.e2
                    rho1 = _windowed_density(v1, c1, x, event.location, event.sigma1)
                    rho2 = _windowed_density(v2, c2, x, event.location, event.sigma2)
                    n1 = float(np.sum(c1.real**2 + c1.imag**2))
                    n2 = float(np.sum(c2.real**2 + c2.imag**2))

            e1_trace[k] = e1
            e2_trace[k] = e2
            pdf1 += rho1 / n1
            pdf2 += rho2 / n2

        final = TwoParticleState(
            SpectralState(c1, self.es1, state.psi1.deficit),
            SpectralState(c2, self.es2, state.psi2.deficit),
            e1,
            e2,
        )
        return TwoBodyRunResult(
            t=dt * np.arange(n_steps + 1),
            e1=e1_trace,
            e2=e2_trace,
            pdf1=pdf1 / n_steps,
            pdf2=pdf2 / n_steps,
            events=events,
            skipped_events=skipped,
            final=final,
            grid=grid,
        )

    def _attempt_collapse(self, state, rho1, rho2, protocol, rng):
        """Sample a collapse center and apply the protocol, with retries for
        the total protocol when the sampled center admits no energy split."""
        if protocol.sampling_density == "product":
            weights = rho1 * rho2
        elif protocol.sampling_density == "psi1":
            weights = rho1
        else:
            weights = rho2
        x = self.grid.x

        if protocol.variant == "individual":
            domain = self.individual_domain(state)
            if domain is None:
                return None
            a = collapse_location(weights, x, domain, rng)
            if a is None:
                return None
            return self.collapse_individual(state, a, protocol)

        domain = self.total_domain(state)
        if domain is None:
            return None
        for _ in range(max(1, protocol.max_retries)):
            a = collapse_location(weights, x, domain, rng)
            if a is None:
                return None
            outcome = self.collapse_total(state, a, protocol, rng)
            if outcome is not None:
                return outcome
        return None

"""The four wall-collapse rules for a particle against a classical soft wall.

A trajectory alternates exact unitary steps with a per-step check of the
probability mass beyond the wall.  When the mass reaches the threshold
(fixed r for rules 1/3, a fresh uniform draw for rules 2/4) the state is
replaced by a narrow Gaussian, centered at the wall (rules 1/2) or at a
Born-rule sample of the pre-collapse density (rules 3/4), then re-projected
onto the retained eigenbasis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grids import EigenSystem
from .states import SpectralState, Wavefunction, expected_energy, gaussian_packet

# event columns produced by the trajectory kernels
EVENT_COLUMNS = ("step", "location", "pre_energy", "post_energy", "threshold", "deficit")


@dataclass(frozen=True)
class WallPostulate:
    """Collapse rule 1-4 with its threshold and post-collapse width."""

    variant: int
    r: float = 0.5
    sigma_post: float = 0.25
    wall_position: float = 5.0
    refractory_steps: int = 1
    location_sampling: str = "full"  # or "beyond_wall", for rules 3/4
    # random-threshold cadence for rules 2/4: redraw per check (default),
    # after each collapse, or hold one draw for the whole run
    threshold_mode: str = "per_step"

    def __post_init__(self):
        if self.variant not in (1, 2, 3, 4):
            raise ValueError(f"postulate variant must be 1-4, got {self.variant}")
        if self.variant in (1, 3) and not (0.0 < self.r < 1.0):
            raise ValueError(f"r must be in (0, 1), got {self.r}")
        if self.sigma_post <= 0:
            raise ValueError(f"sigma_post must be > 0, got {self.sigma_post}")
        if self.refractory_steps < 0:
            raise ValueError("refractory_steps must be >= 0")
        if self.location_sampling not in ("full", "beyond_wall"):
            raise ValueError(f"unknown location_sampling {self.location_sampling!r}")
        if self.threshold_mode not in ("per_step", "per_collapse", "per_run"):
            raise ValueError(f"unknown threshold_mode {self.threshold_mode!r}")

    @property
    def fixed_threshold(self) -> bool:
        return self.variant in (1, 3)

    @property
    def collapse_at_wall(self) -> bool:
        return self.variant in (1, 2)


@dataclass(frozen=True)
class CollapseEvent:
    step_index: int
    time: float
    location: float
    pre_energy: float
    post_energy: float
    threshold_used: float
    deficit: float = 0.0


@dataclass
class WallRunResult:
    """Everything one wall trajectory produces."""

    pdf: np.ndarray  # time-averaged |psi|^2, normalized
    mode_probabilities: np.ndarray  # time-averaged raw |c_n|^2
    overlap: np.ndarray  # |<psi(0)|psi(t_k)>|, k = 0..n_steps
    energy: np.ndarray  # <E>(t_k)
    t: np.ndarray
    events: list[CollapseEvent]
    final_state: SpectralState
    eigensystem: EigenSystem = field(repr=False)
    snapshots: np.ndarray | None = None  # coefficients every stride steps
    snapshot_stride: int = 0

    @property
    def time_averaged_energy(self) -> float:
        return float(np.mean(self.energy[1:]))

    def snapshot_state(self, index: int) -> SpectralState:
        if self.snapshots is None:
            raise ValueError("run was executed without snapshots")
        return SpectralState(self.snapshots[index].copy(), self.eigensystem)


WALL_CELL_WEIGHT = 1.0  # every cell with x_i >= x_wall counts in full


def wall_grid_index(grid, x_wall: float) -> tuple[int, float]:
    """First grid index with x >= x_wall and its quadrature weight.

    The mass beyond the wall is sum_{x_i >= x_wall} rho_i dx: the cell at the
    wall position itself counts in full, so a packet centered exactly on the
    wall carries slightly more than half its mass "beyond" (one-cell
    quantization).
    """
    eps = 1e-9 * max(1.0, abs(x_wall))
    idx = int(np.searchsorted(grid.x, x_wall - eps))
    idx = min(idx, grid.n_points - 1)
    return idx, WALL_CELL_WEIGHT


def beyond_wall_probability(psi: Wavefunction, x_wall: float) -> float:
    """Probability mass at grid points with x >= x_wall, for normalized psi."""
    grid = psi.grid
    rho = psi.density()
    idx, weight = wall_grid_index(grid, x_wall)
    beyond = float(np.sum(rho[idx + 1 :])) + weight * float(rho[idx])
    return beyond * grid.dx / (float(np.sum(rho)) * grid.dx)


def check_and_collapse(
    state: SpectralState,
    postulate: WallPostulate,
    rng: np.random.Generator,
    threshold: float | None = None,
):
    """Single collapse check on a spectral state.

    Returns (state, None) when the threshold is not met, otherwise
    (collapsed_state, CollapseEvent) with step/time left at 0 for the
    caller to fill in.  `threshold` overrides the rule's own value (used
    by the trajectory driver for held random thresholds).
    """
    es = state.eigensystem
    grid = es.grid
    rho = kernels.density(es.states, state.coefficients)
    norm2 = state.norm_sq()
    wall_idx, wall_w = wall_grid_index(grid, postulate.wall_position)
    beyond = (
        (float(np.sum(rho[wall_idx + 1 :])) + wall_w * float(rho[wall_idx]))
        * grid.dx
        / norm2
    )

    if threshold is None:
        threshold = postulate.r if postulate.fixed_threshold else rng.random()
    if beyond < threshold:
        return state, None

    pre_energy = expected_energy(state)
    if postulate.collapse_at_wall:
        location = postulate.wall_position
    else:
        lo = wall_idx if postulate.location_sampling == "beyond_wall" else 0
        weights = rho[lo:]
        total = float(np.sum(weights))
        if total <= 0.0:
            return state, None
        csum = np.cumsum(weights)
        idx = int(np.searchsorted(csum, rng.random() * total, side="right"))
        location = float(grid.x[lo + min(idx, len(csum) - 1)])

    packet = gaussian_packet(grid, location, postulate.sigma_post)
    coeffs = kernels.project_real(es.states, packet.amplitudes.real, grid.dx)
    deficit = 1.0 - float(np.sum(coeffs * coeffs))
    coeffs = coeffs / np.sqrt(np.sum(coeffs * coeffs))
    new_state = SpectralState(coeffs.astype(np.complex128), es, deficit)
    event = CollapseEvent(
        step_index=0,
        time=0.0,
        location=location,
        pre_energy=pre_energy,
        post_energy=expected_energy(new_state),
        threshold_used=float(threshold),
        deficit=deficit,
    )
    return new_state, event


def run_wall_trajectory(
    initial: SpectralState,
    dt: float,
    n_steps: int,
    postulate: WallPostulate | None,
    seed: int,
    stream: int = 0,
    snapshot_stride: int = 0,
) -> WallRunResult:
    """Evolve for n_steps of dt, applying the wall rule after every step.

    The random stream is Philox keyed by (seed, stream); threshold and
    location draws are pre-generated and indexed by step so the event
    sequence does not depend on how many draws earlier steps consumed.
    """
    es = initial.eigensystem
    grid = es.grid
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, stream))))
    threshold_draws = rng.random(n_steps + 1)
    location_draws = rng.random(n_steps + 1)

    threshold_modes = {"per_step": 0, "per_collapse": 1, "per_run": 2}
    if postulate is None:
        variant = 0
        r_fixed, sigma_post, x_wall = 0.0, 1.0, grid.x_max
        wall_idx, wall_w = grid.n_points - 1, 1.0
        refractory, beyond_only, thr_mode = 1, False, 0
    else:
        variant = postulate.variant
        r_fixed = postulate.r
        sigma_post = postulate.sigma_post
        x_wall = postulate.wall_position
        wall_idx, wall_w = wall_grid_index(grid, x_wall)
        refractory = max(postulate.refractory_steps, 1)
        beyond_only = postulate.location_sampling == "beyond_wall"
        thr_mode = threshold_modes[postulate.threshold_mode]

    pdf_sum, prob_sum, overlap, energy, raw_events, snapshots, final = kernels.run_wall_loop(
        es.states,
        es.energies,
        grid.x,
        grid.dx,
        dt,
        initial.coefficients,
        n_steps,
        variant,
        r_fixed,
        sigma_post,
        x_wall,
        wall_idx,
        wall_w,
        refractory,
        beyond_only,
        thr_mode,
        threshold_draws,
        location_draws,
        snapshot_stride,
    )

    events = [
        CollapseEvent(
            step_index=int(row[0]),
            time=float(row[0]) * dt,
            location=float(row[1]),
            pre_energy=float(row[2]),
            post_energy=float(row[3]),
            threshold_used=float(row[4]),
            deficit=float(row[5]),
        )
        for row in raw_events
    ]
    pdf = pdf_sum / n_steps
    return WallRunResult(
        pdf=pdf,
        mode_probabilities=prob_sum / n_steps,
        overlap=overlap,
        energy=energy,
        t=dt * np.arange(n_steps + 1),
        events=events,
        final_state=SpectralState(final, es, initial.deficit),
        eigensystem=es,
        snapshots=snapshots if snapshot_stride else None,
        snapshot_stride=snapshot_stride,
    )

"""Pure-numpy kernels: reference implementations of the hot loops.

The compiled lane in _ckernels.pyx mirrors these semantics exactly (same
formulas, same random-draw indexing), so a given seed produces the same
event sequence on either lane up to floating-point summation order.
"""

from __future__ import annotations

import numpy as np


def reconstruct(states, coeffs):
    """psi on the grid from eigenbasis coefficients: sum_n c_n v_n(x)."""
    re = states @ coeffs.real
    im = states @ coeffs.imag
    return re + 1j * im


def density(states, coeffs):
    """|psi(x)|^2 on the grid, without renormalization."""
    re = states @ coeffs.real
    im = states @ coeffs.imag
    return re * re + im * im


def project_real(states, values, dx):
    """dx-weighted projection of a real grid function onto the eigenbasis."""
    return (values @ states) * dx


def _inverse_cdf_sample(rho, lo, u):
    """Index of the grid cell where the cumulative weight passes u * total."""
    csum = np.cumsum(rho[lo:])
    total = csum[-1]
    idx = int(np.searchsorted(csum, u * total, side="right"))
    return lo + min(idx, len(csum) - 1)


def run_wall_loop(
    states,
    energies,
    x,
    dx,
    dt,
    coeffs0,
    n_steps,
    postulate,
    r_fixed,
    sigma_post,
    x_wall,
    wall_index,
    wall_weight,
    refractory,
    sample_beyond_only,
    threshold_mode,
    threshold_draws,
    location_draws,
    snapshot_stride=0,
):
    """Alternate unitary steps with wall-collapse checks for n_steps.

    postulate: 0 none, 1-4 the four wall rules (1/3 fixed threshold r_fixed,
    2/4 random threshold; 1/2 collapse at the wall, 3/4 at a Born sample).
    wall_weight is the quadrature weight of the cell at wall_index in the
    beyond-wall mass.  threshold_mode for the random rules: 0 redraws the
    threshold at every check, 1 after every collapse, 2 holds one draw for
    the whole run.  threshold_draws/location_draws are uniform(0,1) arrays
    indexed by step so the event sequence is independent of how many draws
    earlier steps consumed.

    Returns (pdf_sum, prob_sum, overlap, energy, events, snapshots, coeffs)
    where pdf_sum accumulates the renormalized |psi|^2 of steps 1..n_steps,
    prob_sum the raw |c_n|^2, events has one row per collapse
    (step, location, pre_energy, post_energy, threshold, deficit), and
    snapshots holds the coefficients of every snapshot_stride-th step
    (starting at step 0; empty when snapshot_stride is 0).
    """
    n_points, n_modes = states.shape
    c = np.array(coeffs0, dtype=np.complex128)
    c0 = c.copy()
    phases = np.exp(-1j * energies * dt)

    pdf_sum = np.zeros(n_points)
    prob_sum = np.zeros(n_modes)
    overlap = np.empty(n_steps + 1)
    energy = np.empty(n_steps + 1)
    events = []
    n_snaps = n_steps // snapshot_stride + 1 if snapshot_stride else 0
    snapshots = np.zeros((n_snaps, n_modes), dtype=np.complex128)
    if snapshot_stride:
        snapshots[0] = c

    def norm2_of(cc):
        return float(np.sum(cc.real * cc.real + cc.imag * cc.imag))

    def energy_of(cc, norm2):
        return float(np.sum((cc.real * cc.real + cc.imag * cc.imag) * energies)) / norm2

    norm2 = norm2_of(c)
    overlap[0] = abs(np.vdot(c0, c))
    energy[0] = energy_of(c, norm2)

    current_threshold = threshold_draws[0] if postulate in (2, 4) else r_fixed
    last_event = -(10**9)

    for k in range(1, n_steps + 1):
        c *= phases
        rho = density(states, c)
        norm2 = norm2_of(c)

        if postulate and (k - last_event) >= refractory:
            beyond = (
                float(np.sum(rho[wall_index + 1 :])) + wall_weight * rho[wall_index]
            ) * dx / norm2
            if postulate in (2, 4) and threshold_mode == 0:
                current_threshold = threshold_draws[k]
            if beyond >= current_threshold:
                pre_e = energy_of(c, norm2)
                if postulate in (1, 2):
                    location = x_wall
                else:
                    lo = wall_index if sample_beyond_only else 0
                    if np.sum(rho[lo:]) <= 0.0:
                        location = None
                    else:
                        idx = _inverse_cdf_sample(rho, lo, location_draws[k])
                        location = x[idx]
                if location is not None:
                    g = np.exp(-((x - location) ** 2) / (4.0 * sigma_post * sigma_post))
                    g /= np.sqrt(np.sum(g * g) * dx)
                    cg = project_real(states, g, dx)
                    deficit = 1.0 - float(np.sum(cg * cg))
                    cg = cg / np.sqrt(np.sum(cg * cg))
                    c = cg.astype(np.complex128)
                    norm2 = 1.0
                    post_e = energy_of(c, norm2)
                    events.append(
                        (k, location, pre_e, post_e, current_threshold, deficit)
                    )
                    last_event = k
                    if postulate in (2, 4) and threshold_mode == 1:
                        current_threshold = threshold_draws[k]
                    rho = density(states, c)

        overlap[k] = abs(np.vdot(c0, c))
        energy[k] = energy_of(c, norm2)
        pdf_sum += rho / norm2
        prob_sum += c.real * c.real + c.imag * c.imag
        if snapshot_stride and k % snapshot_stride == 0:
            snapshots[k // snapshot_stride] = c

    events = np.array(events, dtype=float).reshape(-1, 6)
    return pdf_sum, prob_sum, overlap, energy, events, snapshots, c

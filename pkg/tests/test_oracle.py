import numpy as np
import pytest

from softimpact.grids import Harmonic, build_grid, discretize_hamiltonian
from softimpact.oracle import (
    GaussianPacket,
    OscillatorSpec,
    allowed_domain,
    constant_energy_curve,
    expected_energy_gaussian,
    partition_energy,
    variance_roots,
)

UNIT = OscillatorSpec(mass=1.0, k=1.0, center=0.0)


def grid_energy_quadrature(a, sigma, k, m, c):
    """Independent check: <psi|H|psi> of the sampled Gaussian by applying the
    finite-difference Hamiltonian directly (no eigenbasis involved)."""
    half_width = max(abs(a - c), 0.0) + 30 * sigma + 10
    grid = build_grid(c - half_width, c + half_width, 20001)
    x = grid.x
    psi = np.exp(-((x - a) ** 2) / (4 * sigma * sigma))
    psi /= np.sqrt(np.sum(psi * psi) * grid.dx)
    diag, off = discretize_hamiltonian(Harmonic(k=k, center=c), grid, m)
    hpsi = diag * psi
    hpsi[1:] += off * psi[:-1]
    hpsi[:-1] += off * psi[1:]
    return float(np.sum(psi * hpsi) * grid.dx)


def test_paper_initial_energy_exact():
    assert expected_energy_gaussian(GaussianPacket(-5.0, 1.0), UNIT) == 13.125


def test_ground_state_minimizes_energy():
    sigma = np.sqrt(UNIT.ground_sigma_sq)
    assert expected_energy_gaussian(GaussianPacket(0.0, sigma), UNIT) == pytest.approx(
        0.5, abs=1e-14
    )


def test_centered_unit_width_energy():
    val = expected_energy_gaussian(GaussianPacket(0.0, 1.0), UNIT)
    assert val == pytest.approx(0.625, abs=1e-14)
    assert val == pytest.approx(grid_energy_quadrature(0, 1, 1, 1, 0), abs=1e-6)


def test_energy_formula_matches_quadrature():
    rng = np.random.Generator(np.random.Philox(42))
    for _ in range(100):
        a = rng.uniform(-3, 3)
        sigma = rng.uniform(0.5, 2.0)
        k = rng.uniform(0.5, 2.0)
        m = rng.uniform(0.5, 2.0)
        c = rng.uniform(-2, 2)
        osc = OscillatorSpec(mass=m, k=k, center=c)
        exact = expected_energy_gaussian(GaussianPacket(a + c, sigma), osc)
        quad = grid_energy_quadrature(a + c, sigma, k, m, c)
        assert exact == pytest.approx(quad, abs=1e-5)


def test_variance_roots_ground_state_double_root():
    roots = variance_roots(0.5, 0.0, UNIT)
    assert len(roots) == 1
    assert roots[0] == pytest.approx(0.5, abs=1e-12)


def test_variance_roots_paper_initial_state():
    roots = variance_roots(13.125, -5.0, UNIT)
    assert len(roots) == 2
    # derived by solving the constant-energy constraint: B = 2e/k - (a-c)^2
    # = 1.25, disc = sqrt(1.25^2 - 1) = 0.75, roots (1.25 +- 0.75)/2
    assert roots[0] == pytest.approx(0.25, abs=1e-12)
    assert roots[1] == pytest.approx(1.0, abs=1e-12)
    for s2 in roots:
        back = expected_energy_gaussian(GaussianPacket(-5.0, np.sqrt(s2)), UNIT)
        assert abs(back - 13.125) < 1e-10


def test_variance_roots_infeasible_energy():
    assert variance_roots(0.4, 0.0, UNIT) == []
    assert variance_roots(5.0, 10.0, UNIT) == []


def test_variance_roots_round_trip_random():
    rng = np.random.Generator(np.random.Philox(7))
    checked = 0
    while checked < 1000:
        eps = rng.uniform(0.5, 30.0)
        domain = allowed_domain(eps, UNIT)
        a = rng.uniform(domain[0], domain[1])
        roots = variance_roots(eps, a, UNIT)
        if not roots:
            continue
        for s2 in roots:
            back = expected_energy_gaussian(GaussianPacket(a, np.sqrt(s2)), UNIT)
            assert abs(back - eps) < 1e-10
        checked += 1


def test_allowed_domain_values():
    lo, hi = allowed_domain(0.5, UNIT)
    assert lo == hi == pytest.approx(0.0, abs=1e-12)
    lo, hi = allowed_domain(13.125, UNIT)
    assert hi == pytest.approx(np.sqrt(25.25), abs=1e-12)
    assert allowed_domain(0.4, UNIT) is None
    # outside the domain no variance root exists
    assert variance_roots(13.125, hi + 1e-3, UNIT) == []


def test_monotonic_in_displacement():
    energies = [
        expected_energy_gaussian(GaussianPacket(a, 1.0), UNIT) for a in (0, 1, 2, 4)
    ]
    assert np.all(np.diff(energies) > 0)


def test_partition_energy_basics():
    rng = np.random.Generator(np.random.Philox(3))
    osc2 = OscillatorSpec(mass=1.0, k=4.0, center=0.0)  # omega = 2
    e1, e2 = partition_energy(0.5 + 1.0, UNIT, osc2, rng)
    assert e1 == pytest.approx(0.5, abs=1e-12)
    assert e2 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        partition_energy(1.0, UNIT, osc2, rng)


def test_partition_energy_uniform_mean():
    rng = np.random.Generator(np.random.Philox(11))
    draws = np.array([partition_energy(4.0, UNIT, UNIT, rng) for _ in range(100_000)])
    assert np.all(draws[:, 0] >= 0.5)
    assert np.all(draws[:, 0] <= 3.5)
    assert np.abs(draws.sum(axis=1) - 4.0).max() < 1e-12
    assert draws[:, 0].mean() == pytest.approx(2.0, abs=0.01)


def test_constant_energy_curve_consistency():
    curve = constant_energy_curve(5.125, OscillatorSpec(1.0, 1.0, -2.0), 101)
    assert len(curve) > 0
    for a, s_small, s_large in curve[:: len(curve) // 10]:
        assert s_small <= s_large
    assert constant_energy_curve(0.1, UNIT).shape == (0, 3)

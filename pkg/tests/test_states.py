import numpy as np
import pytest

from softimpact.grids import Harmonic, SoftImpact, build_grid, eigensolve
from softimpact.states import (
    SpectralState,
    TruncationError,
    evolve,
    expected_energy,
    gaussian_packet,
    to_position,
    to_spectral,
)


@pytest.fixture(scope="module")
def soft_system():
    grid = build_grid(-30, 30, 1501)
    es = eigensolve(SoftImpact(1, 10, 5), grid, 1.0, 150)
    return grid, es


@pytest.fixture(scope="module")
def harmonic_system():
    grid = build_grid(-30, 30, 1501)
    es = eigensolve(Harmonic(k=1), grid, 1.0, 150)
    return grid, es


def test_gaussian_packet_normalized(soft_system):
    grid, _ = soft_system
    for center, sigma in [(-5.0, 1.0), (5.0, 0.25), (0.0, 3.0)]:
        psi = gaussian_packet(grid, center, sigma)
        assert psi.norm() == pytest.approx(1.0, abs=1e-8)


def test_gaussian_packet_rejects_bad_input(soft_system):
    grid, _ = soft_system
    with pytest.raises(ValueError):
        gaussian_packet(grid, 0.0, -1.0)
    with pytest.raises(ValueError):
        gaussian_packet(grid, 31.0, 1.0)


def test_projection_of_eigenvector_is_delta(soft_system):
    grid, es = soft_system
    from softimpact.states import Wavefunction

    psi = Wavefunction(es.states[:, 3].astype(np.complex128), grid)
    state = to_spectral(psi, es)
    expected = np.zeros(150)
    expected[3] = 1.0
    assert np.abs(state.coefficients - expected).max() < 1e-10


def test_initial_packet_deficit_under_gate(soft_system):
    grid, es = soft_system
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    assert state.deficit < 1e-3


def test_projection_orthogonal_state_raises(soft_system):
    grid, _ = soft_system
    small = eigensolve(SoftImpact(1, 10, 5), grid, 1.0, 40)
    big = eigensolve(SoftImpact(1, 10, 5), grid, 1.0, 60)
    from softimpact.states import Wavefunction

    psi = Wavefunction(big.states[:, 55].astype(np.complex128), grid)
    with pytest.raises(TruncationError):
        to_spectral(psi, small)


def test_evolve_zero_dt_is_identity(soft_system):
    grid, es = soft_system
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    out = evolve(state, 0.0)
    assert np.array_equal(out.coefficients, state.coefficients)


def test_evolve_preserves_mode_magnitudes(soft_system):
    grid, es = soft_system
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    out = evolve(state, 0.37)
    assert np.allclose(np.abs(out.coefficients), np.abs(state.coefficients), atol=1e-15)


def test_eigenstate_phase_rotation(soft_system):
    grid, es = soft_system
    c = np.zeros(150, dtype=complex)
    c[7] = 1.0
    out = evolve(SpectralState(c, es), 0.2)
    assert out.coefficients[7] == pytest.approx(np.exp(-1j * es.energies[7] * 0.2))


def test_harmonic_revival_period(harmonic_system):
    # |<psi(0)|psi(t)>| of any packet in a harmonic well revives at 2 pi / omega
    grid, es = harmonic_system
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    dt = 0.02
    best_t, best_o = 0.0, 0.0
    cur = state
    for k in range(1, 401):
        cur = evolve(cur, dt)
        if k * dt > 3.0:
            o = abs(np.vdot(state.coefficients, cur.coefficients))
            if o > best_o:
                best_t, best_o = k * dt, o
    assert best_t == pytest.approx(2 * np.pi, rel=0.01)
    assert best_o > 0.999


def test_round_trip_identity_on_retained_subspace(soft_system):
    grid, es = soft_system
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    psi, factor = to_position(state)
    back = to_spectral(psi, es)
    scale = np.sqrt(1.0 - state.deficit)
    assert np.abs(back.coefficients * scale - state.coefficients).max() < 1e-8


def test_single_mode_reconstruction(soft_system):
    grid, es = soft_system
    c = np.zeros(150, dtype=complex)
    c[4] = 1.0
    psi, factor = to_position(SpectralState(c, es))
    assert factor == pytest.approx(1.0, abs=1e-10)
    assert np.abs(psi.amplitudes.real - es.states[:, 4]).max() < 1e-9


def test_initial_packet_round_trip_error_equals_deficit(soft_system):
    grid, es = soft_system
    psi0 = gaussian_packet(grid, -5.0, 1.0)
    state = to_spectral(psi0, es)
    psi1, factor = to_position(state)
    err_sq = np.sum(np.abs(psi1.amplitudes * factor - psi0.amplitudes) ** 2) * grid.dx
    assert err_sq < 1e-3
    assert err_sq == pytest.approx(state.deficit, abs=1e-10)


def test_unitarity_and_energy_over_many_steps(soft_system):
    grid, es = soft_system
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    n0 = state.norm_sq()
    e0 = expected_energy(state)
    cur = state
    for _ in range(500):
        cur = evolve(cur, 0.1)
    assert abs(cur.norm_sq() - n0) < 1e-12
    assert abs(expected_energy(cur) - e0) < 1e-12


def test_time_reversal(soft_system):
    grid, es = soft_system
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    fwd = evolve(state, 1.7)
    back = evolve(SpectralState(np.conj(fwd.coefficients), es), 1.7)
    assert np.abs(np.conj(back.coefficients) - state.coefficients).max() < 1e-10

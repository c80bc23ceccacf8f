import numpy as np
import pytest

from softimpact.grids import SoftImpact, build_grid, eigensolve
from softimpact.states import gaussian_packet, to_spectral
from softimpact.wall import (
    WallPostulate,
    beyond_wall_probability,
    check_and_collapse,
    run_wall_trajectory,
)


@pytest.fixture(scope="module")
def system():
    grid = build_grid(-30, 30, 1501)
    es = eigensolve(SoftImpact(1, 10, 5), grid, 1.0, 150)
    initial = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    return grid, es, initial


def test_beyond_wall_far_packet(system):
    grid, es, _ = system
    psi = gaussian_packet(grid, -5.0, 1.0)
    assert beyond_wall_probability(psi, 5.0) < 1e-15


def test_beyond_wall_centered_packet(system):
    # the wall cell itself counts in full, so a wall-centered packet carries
    # half its mass plus one cell beyond
    grid, es, _ = system
    psi = gaussian_packet(grid, 5.0, 1.0)
    q = beyond_wall_probability(psi, 5.0)
    cell = float(psi.density()[int(np.searchsorted(grid.x, 5.0))]) * grid.dx
    assert q == pytest.approx(0.5 + cell / 2, abs=1e-6)
    assert abs(q - 0.5) <= cell


def test_beyond_wall_uniform_state(system):
    grid, es, _ = system
    from softimpact.states import Wavefunction

    amp = np.ones(grid.n_points, dtype=complex)
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.dx)
    q = beyond_wall_probability(Wavefunction(amp, grid), 0.0)
    assert q == pytest.approx(0.5, abs=1.5 / grid.n_points)


def test_check_threshold_logic(system):
    grid, es, _ = system
    rng = np.random.Generator(np.random.Philox(0))
    post = WallPostulate(variant=1, r=0.5)
    # mass beyond is ~0.3 for a packet at 4.6 with sigma 0.8
    below = to_spectral(gaussian_packet(grid, 4.2, 0.8), es, deficit_threshold=1.0)
    state, event = check_and_collapse(below, post, rng)
    assert event is None
    assert state is below

    above = to_spectral(gaussian_packet(grid, 5.5, 0.8), es, deficit_threshold=1.0)
    state, event = check_and_collapse(above, post, rng)
    assert event is not None
    assert event.location == 5.0


def test_collapse_produces_wall_packet(system):
    grid, es, _ = system
    rng = np.random.Generator(np.random.Philox(1))
    post = WallPostulate(variant=1, r=0.5, sigma_post=0.25)
    above = to_spectral(gaussian_packet(grid, 5.5, 0.8), es, deficit_threshold=1.0)
    state, event = check_and_collapse(above, post, rng)
    assert state.norm_sq() == pytest.approx(1.0, abs=1e-8)
    rho = np.abs(np.sum(es.states * state.coefficients.real[None, :], axis=1)) ** 2
    mean = np.sum(grid.x * rho) / np.sum(rho)
    assert abs(mean - event.location) <= grid.dx


def test_born_sampling_of_localized_state(system):
    grid, es, _ = system
    post = WallPostulate(variant=3, r=0.5, sigma_post=0.25)
    peaked = to_spectral(gaussian_packet(grid, 7.0, 0.1), es, deficit_threshold=1.0)
    for seed in range(5):
        rng = np.random.Generator(np.random.Philox(seed))
        _, event = check_and_collapse(peaked, post, rng)
        assert event is not None
        assert abs(event.location - 7.0) <= 4 * 0.1 + grid.dx


def test_random_threshold_matches_beyond_mass(system):
    # rule 2 collapses with frequency equal to the beyond-wall mass
    grid, es, _ = system
    post = WallPostulate(variant=2, sigma_post=0.25)
    state = to_spectral(gaussian_packet(grid, 4.6, 0.8), es, deficit_threshold=1.0)
    psi = gaussian_packet(grid, 4.6, 0.8)
    q = beyond_wall_probability(psi, 5.0)
    rng = np.random.Generator(np.random.Philox(5))
    n, hits = 2000, 0
    for _ in range(n):
        _, event = check_and_collapse(state, post, rng)
        hits += event is not None
    se = np.sqrt(q * (1 - q) / n)
    assert abs(hits / n - q) < 3 * se


def test_trajectory_unitary_far_wall(system):
    grid, es, initial = system
    post = WallPostulate(variant=1, r=0.5, wall_position=29.0)
    result = run_wall_trajectory(initial, 0.1, 800, post, seed=2)
    assert len(result.events) == 0
    # energy constant between (here: absent) events
    assert np.abs(result.energy - result.energy[0]).max() < 1e-12


def test_trajectory_energy_constant_between_events(system):
    grid, es, initial = system
    post = WallPostulate(variant=2, sigma_post=0.25)
    result = run_wall_trajectory(initial, 0.1, 1500, post, seed=9)
    assert len(result.events) > 0
    steps = [e.step_index for e in result.events]
    segments = np.split(result.energy, np.array(steps))
    for seg in segments:
        if len(seg) > 1:
            assert np.abs(seg[1:] - seg[1]).max() < 1e-12


def test_trajectory_reproducible(system):
    grid, es, initial = system
    post = WallPostulate(variant=4, sigma_post=0.25)
    a = run_wall_trajectory(initial, 0.1, 1200, post, seed=33)
    b = run_wall_trajectory(initial, 0.1, 1200, post, seed=33)
    assert [e.step_index for e in a.events] == [e.step_index for e in b.events]
    assert [e.location for e in a.events] == [e.location for e in b.events]
    assert np.array_equal(a.pdf, b.pdf)
    c = run_wall_trajectory(initial, 0.1, 1200, post, seed=34)
    assert [e.step_index for e in a.events] != [e.step_index for e in c.events]


def test_high_threshold_never_collapses(system):
    grid, es, initial = system
    post = WallPostulate(variant=1, r=0.999999)
    result = run_wall_trajectory(initial, 0.1, 1000, post, seed=2)
    assert len(result.events) == 0


def test_refractory_spacing(system):
    grid, es, initial = system
    post = WallPostulate(variant=2, sigma_post=0.25, refractory_steps=5)
    result = run_wall_trajectory(initial, 0.1, 2000, post, seed=8)
    steps = np.array([e.step_index for e in result.events])
    assert len(steps) > 1
    assert np.diff(steps).min() >= 5


def test_post_collapse_event_bookkeeping(system):
    grid, es, initial = system
    post = WallPostulate(variant=2, sigma_post=0.25)
    result = run_wall_trajectory(initial, 0.1, 1500, post, seed=9)
    for event in result.events:
        assert grid.x_min <= event.location <= grid.x_max
        assert 0 <= event.step_index <= 1500
        assert 0.0 <= event.threshold_used <= 1.0
        assert event.deficit < 1e-3


def test_postulate_validation():
    with pytest.raises(ValueError):
        WallPostulate(variant=5)
    with pytest.raises(ValueError):
        WallPostulate(variant=1, r=1.5)
    with pytest.raises(ValueError):
        WallPostulate(variant=1, sigma_post=0.0)
    with pytest.raises(ValueError):
        WallPostulate(variant=1, location_sampling="nowhere")

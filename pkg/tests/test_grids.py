import numpy as np
import pytest

from softimpact.grids import (
    Harmonic,
    SoftImpact,
    build_grid,
    cached_eigensolve,
    discretize_hamiltonian,
    eigensolve,
    residuals,
    solve_tridiagonal,
)


def test_build_grid_paper_spacing():
    grid = build_grid(-30, 30, 1501)
    assert grid.dx == pytest.approx(0.04, abs=1e-15)
    assert grid.x[0] == -30
    assert grid.x[-1] == pytest.approx(30.0, abs=1e-12)


def test_build_grid_small_cases():
    assert np.allclose(build_grid(0, 1, 3).x, [0, 0.5, 1])
    assert build_grid(-1, 1, 5).dx == 0.5


def test_build_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        build_grid(1, -1, 100)
    with pytest.raises(ValueError):
        build_grid(0, 1, 2)


def test_soft_impact_continuous_at_wall():
    pot = SoftImpact(k1=1, k2=10, x_wall=5)
    left = 0.5 * 1 * 5.0**2
    right = 0.5 * 1 * 5.0**2 + 0.5 * 10 * 0.0**2
    assert pot(5.0) == left == right == 12.5


def test_soft_impact_beyond_wall_value():
    pot = SoftImpact(k1=1, k2=10, x_wall=5)
    assert pot(6.0) == pytest.approx(0.5 * 36 + 0.5 * 10 * 1, abs=1e-14)  # 23


def test_harmonic_minimum_at_center():
    pot = Harmonic(k=1, center=-2)
    assert pot(-2.0) == 0.0
    assert pot(0.0) == pytest.approx(2.0)


def test_potential_invariants_enforced():
    with pytest.raises(ValueError):
        SoftImpact(k1=0, k2=1, x_wall=0)
    with pytest.raises(ValueError):
        SoftImpact(k1=1, k2=-1, x_wall=0)
    with pytest.raises(ValueError):
        Harmonic(k=0)


def test_free_particle_stencil():
    grid = build_grid(0, 2, 3)  # dx = 1
    pot = Harmonic(k=1e-300, center=0)  # effectively V = 0
    diag, off = discretize_hamiltonian(pot, grid, mass=1.0)
    assert np.allclose(diag, 1.0)
    assert np.allclose(off, -0.5)


def test_solve_tridiagonal_2x2():
    vals, vecs = solve_tridiagonal(np.array([2.0, 2.0]), np.array([1.0]), 2)
    assert np.allclose(vals, [1.0, 3.0])


def test_harmonic_ground_state_energy():
    grid = build_grid(-30, 30, 1501)
    es = eigensolve(Harmonic(k=1), grid, mass=1.0, n_kept=12)
    assert es.energies[0] == pytest.approx(0.5, abs=1e-4)
    # second-order differences leave an O(dx^2 <p^4>) bias at higher n
    assert es.energies[10] == pytest.approx(10.5, abs=0.02)


def test_eigensystem_invariants():
    grid = build_grid(-30, 30, 1501)
    pot = SoftImpact(k1=1, k2=10, x_wall=5)
    es = eigensolve(pot, grid, 1.0, 150)
    assert np.all(np.diff(es.energies) > 0)
    assert residuals(es, pot).max() < 1e-8
    gram = es.states.T @ es.states * grid.dx
    assert np.abs(gram - np.eye(150)).max() < 1e-8


def test_soft_impact_low_modes_match_harmonic():
    grid = build_grid(-30, 30, 1501)
    es = eigensolve(SoftImpact(1, 10, 5), grid, 1.0, 250)
    n = np.arange(8)
    assert np.allclose(es.energies[:8], n + 0.5, rtol=0.01)


def test_soft_impact_high_mode_slope_exceeds_harmonic():
    grid = build_grid(-30, 30, 1501)
    soft = eigensolve(SoftImpact(1, 10, 5), grid, 1.0, 250)
    harm = eigensolve(Harmonic(k=1), grid, 1.0, 250)
    n = np.arange(150, 250)
    soft_slope = np.polyfit(n, soft.energies[150:250], 1)[0]
    harm_slope = np.polyfit(n, harm.energies[150:250], 1)[0]
    assert soft_slope > harm_slope


def test_zero_wall_stiffness_equals_harmonic():
    grid = build_grid(-30, 30, 801)
    soft = eigensolve(SoftImpact(1, 0, 5), grid, 1.0, 60)
    harm = eigensolve(Harmonic(k=1), grid, 1.0, 60)
    assert np.array_equal(soft.energies, harm.energies)


def test_spectrum_translation_invariance():
    base = eigensolve(Harmonic(k=1, center=0), build_grid(-30, 30, 1201), 1.0, 40)
    moved = eigensolve(Harmonic(k=1, center=2), build_grid(-28, 32, 1201), 1.0, 40)
    assert np.allclose(base.energies, moved.energies, atol=1e-6)


def test_eigensolve_rejects_bad_n_kept():
    grid = build_grid(-1, 1, 5)
    with pytest.raises(ValueError):
        eigensolve(Harmonic(k=1), grid, 1.0, 6)


def test_eigensystem_cache_roundtrip(tmp_path):
    grid = build_grid(-10, 10, 201)
    pot = Harmonic(k=1)
    first = cached_eigensolve(pot, grid, 1.0, 10, cache_dir=tmp_path)
    assert len(list(tmp_path.glob("eigen_*.npz"))) == 1
    second = cached_eigensolve(pot, grid, 1.0, 10, cache_dir=tmp_path)
    assert np.array_equal(first.energies, second.energies)
    assert np.array_equal(first.states, second.states)

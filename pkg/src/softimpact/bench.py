"""Benchmark the compiled kernel lane against the numpy fallback."""

from __future__ import annotations

import time

import numpy as np

from .grids import SoftImpact, build_grid, eigensolve
from .kernels import get_lane
from .states import gaussian_packet, to_spectral


def _workload(n_points=1501, n_modes=150):
    grid = build_grid(-30.0, 30.0, n_points)
    es = eigensolve(SoftImpact(1.0, 10.0, 5.0), grid, 1.0, n_modes)
    state = to_spectral(gaussian_packet(grid, -5.0, 1.0), es)
    return grid, es, state


def _time_wall_loop(impl, es, grid, coeffs, n_steps, postulate):
    rng = np.random.Generator(np.random.Philox(12345))
    thr = rng.random(n_steps + 1)
    loc = rng.random(n_steps + 1)
    wall_idx = int(np.searchsorted(grid.x, 5.0))
    t0 = time.perf_counter()
    impl.run_wall_loop(
        es.states, es.energies, grid.x, grid.dx, 0.1,
        coeffs, n_steps, postulate, 0.5, 0.25, 5.0, wall_idx, 0.5,
        1, False, False, thr, loc,
    )
    return time.perf_counter() - t0


def _time_density(impl, es, coeffs, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        impl.density(es.states, coeffs)
    return time.perf_counter() - t0


def run_benchmark(n_steps: int = 2000, print_fn=print) -> dict:
    """Time both lanes on the standard trajectory workload; returns timings."""
    grid, es, state = _workload()
    lanes = {}
    for name in ("python", "cython"):
        try:
            lanes[name] = get_lane(name)[1]
        except (ImportError, ValueError):
            print_fn(f"lane {name}: not available")
    results = {}
    for name, impl in lanes.items():
        t_unitary = _time_wall_loop(impl, es, grid, state.coefficients, n_steps, 0)
        t_collapse = _time_wall_loop(impl, es, grid, state.coefficients, n_steps, 2)
        t_density = _time_density(impl, es, state.coefficients, 2000)
        results[name] = {
            "unitary_steps_per_s": n_steps / t_unitary,
            "collapse_steps_per_s": n_steps / t_collapse,
            "density_calls_per_s": 2000 / t_density,
        }
        print_fn(
            f"lane {name:7s}: {n_steps / t_unitary:9.0f} unitary steps/s, "
            f"{n_steps / t_collapse:9.0f} collapse steps/s, "
            f"{2000 / t_density:9.0f} density calls/s"
        )
    if "python" in results and "cython" in results:
        speedup = (
            results["cython"]["collapse_steps_per_s"]
            / results["python"]["collapse_steps_per_s"]
        )
        results["speedup_collapse"] = speedup
        print_fn(f"compiled lane speedup on the collapse loop: {speedup:.2f}x")
    return results

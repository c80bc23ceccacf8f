"""Collapse-postulate simulations for a quantum soft-impact oscillator.

A particle in a harmonic well meets a spring-cushioned wall; the package
propagates its wavefunction spectrally, applies four alternative
interaction-induced collapse rules, and simulates two-oscillator
energy-conserving collapse protocols, emitting the energy and position
statistics that discriminate between the rules.
"""

__version__ = "0.1.0"

from .grids import (  # noqa: F401
    EigenSystem,
    Harmonic,
    SoftImpact,
    SpatialGrid,
    build_grid,
    discretize_hamiltonian,
    eigensolve,
    evaluate_potential,
)
from .oracle import (  # noqa: F401
    GaussianPacket,
    OscillatorSpec,
    allowed_domain,
    expected_energy_gaussian,
    partition_energy,
    variance_roots,
)
from .states import (  # noqa: F401
    SpectralState,
    Wavefunction,
    evolve,
    expected_energy,
    gaussian_packet,
    to_position,
    to_spectral,
)

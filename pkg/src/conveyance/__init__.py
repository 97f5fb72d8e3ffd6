"""Quantum particle conveyance by a moving potential well.

Survival probabilities of a trapped particle under transport schedules,
computed four independent ways: spectral dephasing sums, Crank-Nicolson
propagation with absorbing boundaries, WKB connection formulas (Airy and
Weber), and Siegert resonance states.
"""

from .model import (
    Grid,
    PhysicalParams,
    PotentialSpec,
    bound_state_count,
    bound_state_energies,
    bound_state_wavefunction,
    has_metastable_well,
    tilted_potential,
    well_potential,
)
from .propagator import AbsorbingPotential, TimeGrid, WaveFunction
from .protocols import Protocol, make_protocol

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "PhysicalParams",
    "PotentialSpec",
    "AbsorbingPotential",
    "TimeGrid",
    "WaveFunction",
    "Protocol",
    "make_protocol",
    "well_potential",
    "tilted_potential",
    "has_metastable_well",
    "bound_state_energies",
    "bound_state_count",
    "bound_state_wavefunction",
    "__version__",
]

"""Steepest-entropy-ascent dynamics for finite-dimensional quantum systems."""

from .integrator import IntegrationConfig, Trajectory, integrate, roundtrip_drift
from .models import CompositeSeaModel, HamiltonianModel, KsglModel, PhenoModel, SeaModel
from .sea import sea_rhs
from .state import DensityState, canonical_for_energy, canonical_state, make_state

__all__ = [
    "CompositeSeaModel",
    "DensityState",
    "HamiltonianModel",
    "IntegrationConfig",
    "KsglModel",
    "PhenoModel",
    "SeaModel",
    "Trajectory",
    "canonical_for_energy",
    "canonical_state",
    "integrate",
    "make_state",
    "roundtrip_drift",
    "sea_rhs",
]

__version__ = "0.1.0"

"""Radiation hydrodynamics with vacuum: subproblem solvers, Picard coupling and diagnostics."""

from .grid import AngularFrequencyQuadrature, FluidState, PhysicalParams, SpatialGrid, validate_parameters

__version__ = "0.1.0"

__all__ = [
    "AngularFrequencyQuadrature",
    "FluidState",
    "PhysicalParams",
    "SpatialGrid",
    "validate_parameters",
]

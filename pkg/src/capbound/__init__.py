"""Capacity-based two-sided bounds for the bottom of the spectrum of magnetic
Schrodinger operators, computed on finite-difference lattices."""

from .capacity import CompactSet, cap, cube_capacity, is_negligible
from .carving import CarvingResult, joint_min, min_over_F
from .diameter import DiameterResult, diameter_exterior, diameter_limit, positivity_scan
from .fibered import FiberedProblem, fibered_diameter, infimum_over_fibers
from .gauge import cube_data, effective_potential, optimize_gauge
from .grid import CubeWindow, DomainMask, Lattice, ScalarField, VectorField
from .spectrum import MagneticOperator, bottom, counting, persson_limit

__version__ = "0.1.0"

__all__ = [
    "CompactSet", "cap", "cube_capacity", "is_negligible",
    "CarvingResult", "joint_min", "min_over_F",
    "DiameterResult", "diameter_exterior", "diameter_limit", "positivity_scan",
    "FiberedProblem", "fibered_diameter", "infimum_over_fibers",
    "cube_data", "effective_potential", "optimize_gauge",
    "CubeWindow", "DomainMask", "Lattice", "ScalarField", "VectorField",
    "MagneticOperator", "bottom", "counting", "persson_limit",
]

"""Numerical toolkit for Fourier integral operators with rough phases.

Submodules
----------
grid
    Polar frequency grids, spatial lattices and ball grids, norms.
phase
    Plane-wave phases with a compactly supported perturbation, their level
    set geometry and an assumption checker.
dyadic
    Littlewood-Paley, angular and in-octave partitions of unity.
fio
    The operator, its dyadic pieces and the norm and orthogonality probes.
kernel
    The kernel of a piece composed with its adjoint, its decay envelope and
    Schur row sums.
parametrix
    Half-wave operators and the solve for initial data.
experiments, cli
    Configured measurement runs and the command-line entry point.
"""

from .dyadic import build_angular_family, build_lp_family, build_second_frequency_family
from .fio import FioOperator, operator_norm, orthogonality_scan, random_density, symbol
from .grid import build_ball_grid, build_lattice_grid, build_polar_grid
from .parametrix import assemble_system, solve_data
from .phase import check_assumptions, flat_phase, perturbed_phase

__version__ = "0.1.0"

__all__ = [
    "FioOperator",
    "assemble_system",
    "build_angular_family",
    "build_ball_grid",
    "build_lattice_grid",
    "build_lp_family",
    "build_polar_grid",
    "build_second_frequency_family",
    "check_assumptions",
    "flat_phase",
    "operator_norm",
    "orthogonality_scan",
    "perturbed_phase",
    "random_density",
    "solve_data",
    "symbol",
    "__version__",
]

"""Interacting Brownian particles near a rigid crystal: construction,
rigidity certification, cooled Langevin dynamics, and rigid-body motion
statistics."""

__version__ = "0.1.0"

from .crystal import (Crystal, join, lattice_patch, make_crystal, octahedron,
                      simplex_cell, triangular_basis)
from .dynamics import (PathRecord, SdeConfig, cooling_schedule, energy,
                       simulate_ensemble, simulate_path, total_force)
from .fit import (Decomposition, fit_isometry, gradient_orthogonality,
                  rotation_derivative, solve_skew_product, tube_membership)
from .limits import (MacroscopicBody, crystal_moments, empirical_measure,
                     extract_angular_path, law_comparison, rotation_bm_ensemble)
from .potential import (PotentialSpec, eval_potential, pair_force, pair_hessian,
                        validate_assumption)
from .rigidity import (RigidityReport, assemble_hessian, energy_form, force_form,
                       recover_isometry, rigidity_report, trivial_motion_basis)

__all__ = [
    "Crystal", "Decomposition", "MacroscopicBody", "PathRecord",
    "PotentialSpec", "RigidityReport", "SdeConfig",
    "assemble_hessian", "cooling_schedule", "crystal_moments", "energy",
    "energy_form", "empirical_measure", "eval_potential", "extract_angular_path",
    "fit_isometry", "force_form", "gradient_orthogonality", "join",
    "lattice_patch", "law_comparison", "make_crystal", "octahedron",
    "pair_force", "pair_hessian", "recover_isometry", "rigidity_report",
    "rotation_bm_ensemble", "rotation_derivative", "simplex_cell",
    "simulate_ensemble", "simulate_path", "solve_skew_product", "total_force",
    "triangular_basis", "trivial_motion_basis", "tube_membership",
    "validate_assumption",
]

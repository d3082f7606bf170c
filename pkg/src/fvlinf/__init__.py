"""Finite volume B-schemes for noncoercive convection-diffusion with De Giorgi L-infinity audits."""
__version__ = "0.1.0"

from .bfunctions import CENTERED_B, SCHARFETTER_GUMMEL_B, UPWIND_B, BFunction, check_b_properties, custom_b, \
    get_b, register_b
from .degiorgi import BoundConstants, DeGiorgiReport, a_priori_bound, beta_u, calibrate_boundM_C, \
    check_fundamental_estimate, decompose_signed, energy, level_set_measure, normalized_positive_part, \
    sequence_bound, truncation_threshold, verify_energy_cascade, verify_uniform_bound
from .linalg import SparseMatrix, direct_solve
from .mesh import Mesh, MeshError, build_rectangular_mesh, check_admissibility, dirichlet_on, load_mesh, \
    save_mesh
from .presets import get_preset, random_problem
from .problem import Norms, ProblemSpec, compute_norms
from .scheme import AssemblyError, SolverError, assemble, assemble_numflux2, check_m_matrix, \
    discretize_data, solve, solve_problem

__all__ = [
    "CENTERED_B", "SCHARFETTER_GUMMEL_B", "UPWIND_B", "BFunction", "check_b_properties", "custom_b", "get_b",
    "register_b", "BoundConstants", "DeGiorgiReport", "a_priori_bound", "beta_u", "calibrate_boundM_C",
    "check_fundamental_estimate", "decompose_signed", "energy", "level_set_measure", "normalized_positive_part",
    "sequence_bound", "truncation_threshold", "verify_energy_cascade", "verify_uniform_bound", "SparseMatrix", "direct_solve",
    "Mesh", "MeshError", "build_rectangular_mesh", "check_admissibility", "dirichlet_on", "load_mesh",
    "save_mesh", "get_preset", "random_problem", "Norms", "ProblemSpec", "compute_norms", "AssemblyError",
    "SolverError", "assemble", "assemble_numflux2", "check_m_matrix", "discretize_data", "solve",
    "solve_problem",
]

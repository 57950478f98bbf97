"""Numerical laboratory for averaged fixed-point orbits on the Gaussian
unit curve: admissible step meshes, exact inner-product orbit arithmetic,
running-mean norms, and machine-checked verification suites."""

from .curve import (QuadratureSpec, chord_distance, coord_component,
                    coord_inner_truncated, coord_truncation_index,
                    coord_vector, derivative_identities, kernel_eval,
                    l2_inner_quadrature, l2_point_eval)
from .mesh import (BlockMeta, Mesh, MeshInvalidError, block_level_deviation,
                   block_mesh_fractions, build_block_mesh,
                   build_harmonic_mesh, ensure_valid,
                   harmonic_mesh_fractions, mesh_level, step_condition_forms,
                   validate_mesh)
from .orbit import (CesaroTrace, Orbit, block_mean_norm, build_orbit,
                    cesaro_lower_bound_check, cesaro_norms,
                    cone_alignment_identity, firm_limit_residuals,
                    firm_residual, firm_residual_sweep, orbit_identities,
                    orbit_point, pair_inner, weak_probe, weak_probe_values)
from .report import CheckRecord, VerificationReport, make_record
from .verify import (check_exp_ineq, check_expexp, check_sep_sum,
                     sep_sum_bruteforce, suite_block, suite_harmonic)

__version__ = "0.1.0"

__all__ = [
    "BlockMeta", "CesaroTrace", "CheckRecord", "Mesh", "MeshInvalidError",
    "Orbit", "QuadratureSpec", "VerificationReport", "block_level_deviation",
    "block_mean_norm", "block_mesh_fractions", "build_block_mesh",
    "build_harmonic_mesh", "build_orbit", "cesaro_lower_bound_check",
    "cesaro_norms", "check_exp_ineq", "check_expexp", "check_sep_sum",
    "chord_distance", "cone_alignment_identity", "coord_component",
    "coord_inner_truncated", "coord_truncation_index", "coord_vector",
    "derivative_identities", "ensure_valid", "firm_limit_residuals",
    "firm_residual", "firm_residual_sweep", "harmonic_mesh_fractions",
    "kernel_eval", "l2_inner_quadrature", "l2_point_eval", "make_record",
    "mesh_level", "orbit_identities", "orbit_point", "pair_inner",
    "sep_sum_bruteforce", "step_condition_forms", "suite_block",
    "suite_harmonic", "validate_mesh", "weak_probe", "weak_probe_values",
]

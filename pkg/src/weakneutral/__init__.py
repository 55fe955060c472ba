"""Weakly neutral 2D inclusions through imperfect interfaces.

Design an interface parameter on the circle preimage of a conformally mapped
inclusion so that the leading (dipole) far-field perturbation cancels, and
verify the cancellation with two independent solvers: a Fourier solver on the
disk and a Nystrom boundary-integral solver on the mapped shape.
"""

from .bem import (
    BoundaryMesh,
    DensitySolution,
    apply_adjoint_double_layer,
    apply_hypersingular,
    discretize,
    double_layer_matrix,
    eval_field,
    fourier_diff_matrix,
    hypersingular_matrix,
    kstar_matrix,
    polarization_general,
    polarization_perfect,
    single_layer_matrix,
    solve_imperfect,
    solve_perfect,
    too_close,
    write_mesh_csv,
)
from .conformal import (
    ADMISSIBLE_BOUND,
    ConformalMap,
    admissibility,
    eval_derivative,
    eval_map,
    invert_map,
    make_droplet_map,
    make_ellipse_map,
    make_laurent_map,
    parse_shape_spec,
    read_shape_file,
)
from .disk_spectral import (
    FourierDensity,
    TridiagonalSystem,
    eval_disk_field,
    polarization,
    solve_dense,
    solve_tridiagonal,
    solve_tridiagonal_elimination,
    tridiagonal_system,
    write_density_json,
)
from .interface import (
    InterfaceParameter,
    beta_on_boundary,
    calibrate_gamma,
    design,
    gamma_closed_form,
    gamma_eval,
    neutral_disk_beta,
    phase_for_complex_b,
    write_beta_csv,
    write_interface_json,
)
from .pt import PolarizationTensor, read_pt_json, write_pt_json
from .verify import (
    CheckResult,
    DecayFit,
    GeometryResidual,
    acceptance_suite,
    best_fit_ellipse_residual,
    ellipsoid_residual,
    farfield_decay,
    mesh_samples,
    neutrality_gap,
    oracle_crosscheck,
    pt_invariance,
    sample_ellipse,
    sample_ellipsoid,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "ADMISSIBLE_BOUND",
    "BoundaryMesh",
    "CheckResult",
    "ConformalMap",
    "DecayFit",
    "DensitySolution",
    "FourierDensity",
    "GeometryResidual",
    "InterfaceParameter",
    "PolarizationTensor",
    "TridiagonalSystem",
    "acceptance_suite",
    "admissibility",
    "apply_adjoint_double_layer",
    "apply_hypersingular",
    "best_fit_ellipse_residual",
    "beta_on_boundary",
    "calibrate_gamma",
    "design",
    "discretize",
    "double_layer_matrix",
    "ellipsoid_residual",
    "eval_derivative",
    "eval_disk_field",
    "eval_field",
    "eval_map",
    "farfield_decay",
    "fourier_diff_matrix",
    "gamma_closed_form",
    "gamma_eval",
    "hypersingular_matrix",
    "invert_map",
    "kstar_matrix",
    "make_droplet_map",
    "make_ellipse_map",
    "make_laurent_map",
    "mesh_samples",
    "neutral_disk_beta",
    "neutrality_gap",
    "oracle_crosscheck",
    "parse_shape_spec",
    "polarization",
    "polarization_general",
    "polarization_perfect",
    "pt_invariance",
    "read_pt_json",
    "read_shape_file",
    "sample_ellipse",
    "sample_ellipsoid",
    "single_layer_matrix",
    "solve_dense",
    "solve_imperfect",
    "solve_perfect",
    "solve_tridiagonal",
    "solve_tridiagonal_elimination",
    "too_close",
    "tridiagonal_system",
    "write_beta_csv",
    "write_density_json",
    "write_interface_json",
    "write_mesh_csv",
    "write_pt_json",
    "write_report",
]

"""Numerical checks for Moser-Trudinger bounds on orthonormal systems."""

__version__ = "0.1.0"

from .cli import ExperimentConfig, cli_main, read_config, write_config
from .constants import bessel_j, bessel_zero, lambda_gn, mt_constant, semiclassical_weight, \
    unit_ball_volume
from .cutoff import CutoffSpec, check_lemma21_band, check_lemma21_low, check_lemma34, \
    cutoff_project, pointwise_chain_ratio, proof_pipeline, rumin_layer_cake
from .density import DensityField, MTParams, check_log_bound, check_point_bound, \
    check_remainder_bound, check_semiclassical_bound, density_field, exp_average, \
    jensen_lower_bound, mt_functional, sandwich_table
from .family import Family, family_from_eigenbasis, family_from_operator, \
    hoffmann_ostenhof_report, mix_family, verify_constraint
from .fractional import assemble_halflap, extension_isometry_check, run_d1_suite
from .grids import Domain, Grid1D, Grid2D, grid_for_disk, grid_for_rectangle
from .presets import run_suite
from .report import Report, emit_csv, load_reports, make_report, worst_status, write_reports
from .schrodinger import SpectralOperator, assemble_schrodinger, eta_gap, \
    fit_resolvent_expansion, laplacian_operator
from .spectral import SpectralBasis, eigenbasis_disk, eigenbasis_mask, eigenbasis_rectangle, \
    rectangle_spectrum, weyl_diagnostics

"""Slicing constants, inequality checks, experiments and the command line."""
from ..constants import ball_volume, c_n, general_constant, stability_coefficient
from .checks import (
    INEQUALITY_IDS,
    InequalityReport,
    StabilitySpec,
    check_dual_vr,
    check_hyperplane_general,
    check_hyperplane_unconditional,
    check_hyperplane_volume,
    check_stability,
    composite_stability_spec,
    recompute_rhs,
)
from .experiment import ExperimentResult, parse_config, run_experiment

__all__ = [
    "INEQUALITY_IDS",
    "ExperimentResult",
    "InequalityReport",
    "StabilitySpec",
    "ball_volume",
    "c_n",
    "check_dual_vr",
    "check_hyperplane_general",
    "check_hyperplane_unconditional",
    "check_hyperplane_volume",
    "check_stability",
    "composite_stability_spec",
    "general_constant",
    "parse_config",
    "recompute_rhs",
    "run_experiment",
    "stability_coefficient",
]

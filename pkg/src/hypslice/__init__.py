"""Numerical convex geometry: measures of star bodies, central sections,
box factorizations and checks of slicing inequalities for arbitrary measures."""
from ._backend import BACKEND
from .bodies import (
    DiagonalMap,
    LpStructure,
    SearchConfig,
    StarBody,
    body_from_spec,
    dilate,
    linear_image,
    make_lp_ball,
    minkowski,
    polar,
    radial,
    unconditionality_witness,
)
from .constants import ball_volume, c_n, general_constant, lp_ball_volume, stability_coefficient
from .errors import NumericError, UsageError
from .factorization import (
    SandwichReport,
    VolumeRatioReport,
    john_diagonal_ellipsoid,
    lozanovskii_box,
    lozanovskii_outer_body,
    mahler_volume,
    verify_sandwich,
    volume_ratio_report,
)
from .measures import Density, builtin_density, custom_density, density_from_spec, shifted_density
from .quadrature import (
    Estimate,
    QuadScheme,
    grid_oracle_section,
    grid_oracle_volume,
    integrate_body,
    integrate_section,
)
from .sections import (
    MaxSectionResult,
    OptConfig,
    intersection_body_of,
    max_section,
    radial_distance,
)

__version__ = "0.1.0"

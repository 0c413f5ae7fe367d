"""Multiscale rectifiability analysis of weighted point clouds.

Treats a finite weighted point cloud as a discrete measure on R^n and
computes multiscale flatness and density statistics over the half-open
dyadic cube system (L^p beta numbers, the Jones function, Hausdorff density
ratios, the density sum S), then runs the constructive good/bad-cube
partition and tree-curve extraction that turns points with small density
sum into rectifiable-curve approximants with certified length bounds.
"""

from ._backend import BACKEND
from .beta import (
    AffinePlane,
    BetaResult,
    JonesEstimate,
    beta2_closed_form,
    beta2_ball_alternate,
    beta_oracle,
    beta_p_general,
    check_p_range,
    cube_betas,
    dyadic_beta_sum,
    jones_function,
    liminf_beta_diagnostic,
    triple_cube_betas,
)
from .density import (
    DensityEstimate,
    SsumReport,
    density_estimate,
    density_sum,
    jones_density_diagnostic,
    unit_ball_volume,
)
from .errors import (
    DepthError,
    InputError,
    InvariantViolation,
    RangeError,
    RectiscopeError,
)
from .generators import GeneratorSpec, generate
from .measure import (
    Ball,
    DiscreteMeasure,
    DyadicCubeId,
    MassTree,
    TripleCube,
    ball_mass,
    build_mass_tree,
    cube_geometry,
    cube_of_point,
    restrict_to_region,
)
from .rectify import (
    CoverageReport,
    CurveTree,
    ExtractionResult,
    GoodBadPartition,
    LengthCertificate,
    LevelSet,
    PartitionConfig,
    Polyline,
    build_curve_tree,
    classify_cubes,
    coverage_report,
    extract_rectifiable_family,
    level_set_A,
    parameterize_curve,
    partition_properties_check,
    tree_length_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "AffinePlane",
    "BACKEND",
    "Ball",
    "BetaResult",
    "CoverageReport",
    "CurveTree",
    "DensityEstimate",
    "DepthError",
    "DiscreteMeasure",
    "DyadicCubeId",
    "ExtractionResult",
    "GeneratorSpec",
    "GoodBadPartition",
    "InputError",
    "InvariantViolation",
    "JonesEstimate",
    "LengthCertificate",
    "LevelSet",
    "MassTree",
    "PartitionConfig",
    "Polyline",
    "RangeError",
    "RectiscopeError",
    "SsumReport",
    "TripleCube",
    "ball_mass",
    "beta2_ball_alternate",
    "beta2_closed_form",
    "beta_oracle",
    "beta_p_general",
    "build_curve_tree",
    "build_mass_tree",
    "check_p_range",
    "classify_cubes",
    "coverage_report",
    "cube_betas",
    "cube_geometry",
    "cube_of_point",
    "density_estimate",
    "density_sum",
    "dyadic_beta_sum",
    "extract_rectifiable_family",
    "generate",
    "jones_density_diagnostic",
    "jones_function",
    "level_set_A",
    "liminf_beta_diagnostic",
    "parameterize_curve",
    "partition_properties_check",
    "restrict_to_region",
    "tree_length_certificate",
    "triple_cube_betas",
    "unit_ball_volume",
]

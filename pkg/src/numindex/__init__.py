"""Numerical radius, numerical index and projection-tower limit scans on
mixed-exponent lp-sum spaces."""

from ._kernels import BACKEND, NUMBA_ENABLED
from .errors import (
    DegenerateSupportError,
    DimensionMismatchError,
    LevelRangeError,
    NonSmoothSpecError,
    NumindexError,
    SpecValidationError,
    ZeroVectorError,
)
from .spaces import (
    Projection,
    TowerSpec,
    TowerVector,
    ambient_projection,
    compose_projections,
    load_spec,
    norm,
    prefix_norm,
    project,
    random_sphere_point,
    save_spec,
    step_projection,
)
from .duality import (
    BConstant,
    CCReport,
    Functional,
    NormingSet,
    b_constant,
    certify_CC,
    dual_norm,
    norming_functional,
    norming_set,
    norming_sup,
    restrict,
)
from .operators import (
    Budget,
    NormEstimate,
    Operator,
    apply,
    compose_with_projection,
    embed,
    identity,
    load_operator,
    operator_norm,
    random_operator,
    save_operator,
)
from .radius import (
    RadiusEstimate,
    StatePair,
    modified_radius,
    numerical_radius,
    projection_radius_limit,
    projection_radius_sequence,
    sample_numerical_range,
)
from .index import (
    IndexEstimate,
    ScanRow,
    ScanTable,
    estimate_index,
    estimate_modified_index,
    limit_scan,
    scan_envelope,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "NUMBA_ENABLED",
    "BConstant",
    "Budget",
    "CCReport",
    "DegenerateSupportError",
    "DimensionMismatchError",
    "Functional",
    "IndexEstimate",
    "LevelRangeError",
    "NonSmoothSpecError",
    "NormEstimate",
    "NormingSet",
    "NumindexError",
    "Operator",
    "Projection",
    "RadiusEstimate",
    "ScanRow",
    "ScanTable",
    "SpecValidationError",
    "StatePair",
    "TowerSpec",
    "TowerVector",
    "ZeroVectorError",
    "ambient_projection",
    "apply",
    "b_constant",
    "certify_CC",
    "compose_projections",
    "compose_with_projection",
    "dual_norm",
    "embed",
    "estimate_index",
    "estimate_modified_index",
    "identity",
    "limit_scan",
    "load_operator",
    "load_spec",
    "modified_radius",
    "norm",
    "norming_functional",
    "norming_set",
    "norming_sup",
    "numerical_radius",
    "operator_norm",
    "prefix_norm",
    "project",
    "projection_radius_limit",
    "projection_radius_sequence",
    "random_operator",
    "random_sphere_point",
    "restrict",
    "sample_numerical_range",
    "save_operator",
    "save_spec",
    "scan_envelope",
    "step_projection",
]

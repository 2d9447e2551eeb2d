"""Exact curve tests for the J, dHYM and Z-critical equations on Kähler surfaces."""
from .errors import (
    CurveError,
    DegenerateCharge,
    DimensionError,
    GuardError,
    NotPseudoeffective,
    ParseError,
    PhaseCollision,
    PreconditionError,
    SearchFailure,
    SignatureError,
    SpecError,
    SurfaceError,
)
from .exact import EpsRational, Q, QComplex
from .lattice import (
    DivisorClass,
    PositivityReport,
    SurfaceLattice,
    blowup_general_point,
    builtin,
    classify,
    load_surface,
    pair,
)
from .pde import (
    StabilityData,
    certify,
    dhym_problem,
    flow_singular_locus,
    j_problem,
    nef_threshold,
    optimal_destabilizers,
    z_problem,
)
from .stability import (
    SlopeTestConfig,
    construct_jstable_not_uniform,
    ratio_threshold,
    slope_invariants,
    slope_semistability,
)
from .walls import FamilySpec, scan, dhym_slice_spec, wall_values
from .zariski import decompose, decompose_oracle, destabilizer_set, neg_limit, uniform_test_set

__version__ = "0.1.0"

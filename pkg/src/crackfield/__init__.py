"""crackfield: quasi-static mode-III phase-field fracture toolkit.

Forward simulation of crack propagation in media with spatially varying
fracture toughness (AT1 and AT2 surface energies), J-integral evaluation
on rectangular contours, and inverse estimation of the toughness field
from crack data.
"""

from .errors import (
    CorruptArchive,
    CrackfieldError,
    Degenerate,
    EmptyWindow,
    InvalidScenario,
    MissingReference,
    NoConvergence,
    NoCrack,
    NonIntegralDivision,
    ParseError,
    RankDeficient,
    TipOutOfDomain,
    UnknownCase,
    ValidationError,
)
from .grid import (
    AT1,
    AT2,
    GridSpec,
    ModelParams,
    RhsField,
    ScalarField,
    SimState,
    SurfingBC,
    bilinear_sample,
    gradient,
    make_grid,
    surfing_displacement,
)
from .toughness import (
    CASE_STRAIN,
    Disk,
    Stripe,
    ToughnessField,
    ToughnessScenario,
    preset,
    preset_strain,
    rasterize,
)
from .elasticity import (
    ElasticProblem,
    assemble_system,
    face_coefficient,
    solve_displacement,
    strain_energy_density,
)
from .evolution import (
    Trajectory,
    ZSystem,
    initial_crack,
    rhs_pre_plus,
    run_simulation,
    step,
    total_energy,
    track_tip,
)
from .jintegral import (
    JContour,
    JParts,
    JSeries,
    default_contour,
    j_gamma1,
    j_gamma2,
    j_gamma3,
    j_gamma4,
    j_total,
    normalized_series,
)
from .estimation import (
    EstimationConfig,
    EstimationReport,
    PolyFit,
    SamplePoint,
    SlopeKMeans,
    ToughnessEstimator,
    XYPoint,
    build_xy,
    estimate,
    fit_local_poly,
    regress_origin,
    sample_near_tip,
    sample_uncracked,
    slope_kmeans,
)

__version__ = "0.1.0"

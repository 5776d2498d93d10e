"""Mobility-class-aware cell association in two-tier cellular networks.

Monte-Carlo rate-coverage estimation, per-class bias optimization
(three-stage heuristic, common-bias CRE, exhaustive grid search), and
trace analytics deriving the user-convexity demand metric from
mobility and data-usage logs.
"""

from .association import (
    AssociationMap,
    BiasVector,
    associate,
    cell_loads,
    db_from_linear,
    linear_from_db,
)
from .coverage import (
    BITS_PER_MB,
    SECONDS_PER_DAY,
    CoverageEstimator,
    CoverageReport,
    EstimationError,
    estimate_rate_coverage,
    handover_efficiency,
    rate_requirement,
    user_rate,
)
from .model import (
    MIN_PATH_DISTANCE_M,
    THERMAL_NOISE_W_PER_HZ,
    ClassProfile,
    ConfigError,
    Deployment,
    NetworkConfig,
    Tier,
    UserClass,
    default_profiles,
    largest_remainder_counts,
    link_distances,
    mean_power_matrix,
    received_power,
    sample_deployment,
    sinr,
)
from .optimizer import (
    DEFAULT_CONVEXITY_VALUES,
    DEFAULT_GRID_DB,
    BiasGrid,
    DemandScenario,
    OptimizerResult,
    Scheme,
    SweepPoint,
    UnsatisfiableRequirementError,
    convexity_sweep,
    cre_optimize,
    full_search,
    required_bandwidth,
    run_scheme,
    stage1_stationary_bias,
    stage2_walking_bias,
    stage3_vehicular_bias,
    three_stage_optimize,
)
from .traces import (
    DEFAULT_STATIONARY_CUTOFF_KMH,
    EARTH_RADIUS_M,
    TRACE_CSV_HEADER,
    VEHICULAR_CUTOFF_KMH,
    ConvexityReport,
    ConvexityUndefinedError,
    InsufficientDataError,
    MobilitySegment,
    TraceFormatError,
    TraceSample,
    aggregate_population,
    aggregate_user,
    analyze_trace,
    build_segments,
    classify_mobility,
    compute_velocity,
    haversine_m,
    read_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AssociationMap",
    "BITS_PER_MB",
    "BiasGrid",
    "BiasVector",
    "ClassProfile",
    "ConfigError",
    "ConvexityReport",
    "ConvexityUndefinedError",
    "CoverageEstimator",
    "CoverageReport",
    "DEFAULT_CONVEXITY_VALUES",
    "DEFAULT_GRID_DB",
    "DEFAULT_STATIONARY_CUTOFF_KMH",
    "DemandScenario",
    "Deployment",
    "EARTH_RADIUS_M",
    "EstimationError",
    "InsufficientDataError",
    "MIN_PATH_DISTANCE_M",
    "MobilitySegment",
    "NetworkConfig",
    "OptimizerResult",
    "Scheme",
    "SECONDS_PER_DAY",
    "SweepPoint",
    "THERMAL_NOISE_W_PER_HZ",
    "TRACE_CSV_HEADER",
    "Tier",
    "TraceFormatError",
    "TraceSample",
    "UnsatisfiableRequirementError",
    "UserClass",
    "VEHICULAR_CUTOFF_KMH",
    "aggregate_population",
    "aggregate_user",
    "analyze_trace",
    "associate",
    "build_segments",
    "cell_loads",
    "classify_mobility",
    "compute_velocity",
    "convexity_sweep",
    "cre_optimize",
    "db_from_linear",
    "default_profiles",
    "estimate_rate_coverage",
    "full_search",
    "handover_efficiency",
    "haversine_m",
    "largest_remainder_counts",
    "linear_from_db",
    "link_distances",
    "mean_power_matrix",
    "read_trace_csv",
    "received_power",
    "required_bandwidth",
    "run_scheme",
    "sample_deployment",
    "sinr",
    "stage1_stationary_bias",
    "stage2_walking_bias",
    "stage3_vehicular_bias",
    "three_stage_optimize",
    "user_rate",
]

"""Availability-aware peer grouping for unstructured overlays.

Peers with time-of-day presence patterns self-organize into small groups
whose combined availability covers the whole day. The package provides
the availability arithmetic, the two pairing scores, the gossip and
invitation protocol, a deterministic round-based simulator with a
random-partition baseline, and the distribution analysis behind the
emitted CSV curves and figures.
"""

from .analysis import (
    DEFAULT_BUCKETS,
    LOW_AVAILABILITY,
    ComparisonReport,
    Histogram,
    RunStats,
    availability_cdf,
    bucket_values,
    compare_runs,
    fraction_below,
    run_stats,
    run_summary,
    scott_bucket_count,
)
from .availability import (
    EPSILON,
    GeneratorParams,
    alpha_availability,
    alpha_availability_profile,
    clamp,
    generate_diurnal,
    group_vector,
    merge_vectors,
    validate_vector,
)
from .errors import (
    ConfigError,
    ConfigMismatch,
    DegenerateSample,
    EmptyInput,
    EmptyRoster,
    GroupingError,
    InvalidAlpha,
    InvalidParams,
    LengthMismatch,
    NoConvergence,
    NotAMember,
    OutOfRange,
    SizeExceeded,
    StaleCandidate,
    TopologyInfeasible,
)
from .metrics import (
    Contribution,
    GroupSummary,
    Metric,
    contribution_ratio,
    contribution_utility,
    pair_contribution,
    slot_contribution_ratio,
    utility_gain,
)
from .protocol import (
    Group,
    GroupingEngine,
    KnownEntry,
    KnownList,
    MergeRecord,
    MessageCounter,
    Peer,
)
from .simulator import (
    ChurnMode,
    GroupReport,
    RoundReport,
    RunMetrics,
    SimConfig,
    World,
    build_overlay,
    build_world,
    random_grouping,
    run_to_convergence,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # availability
    "EPSILON",
    "GeneratorParams",
    "alpha_availability",
    "alpha_availability_profile",
    "clamp",
    "generate_diurnal",
    "group_vector",
    "merge_vectors",
    "validate_vector",
    # metrics
    "Contribution",
    "GroupSummary",
    "Metric",
    "contribution_ratio",
    "contribution_utility",
    "pair_contribution",
    "slot_contribution_ratio",
    "utility_gain",
    # protocol
    "Group",
    "GroupingEngine",
    "KnownEntry",
    "KnownList",
    "MergeRecord",
    "MessageCounter",
    "Peer",
    # simulator
    "ChurnMode",
    "GroupReport",
    "RoundReport",
    "RunMetrics",
    "SimConfig",
    "World",
    "build_overlay",
    "build_world",
    "random_grouping",
    "run_to_convergence",
    # analysis
    "DEFAULT_BUCKETS",
    "LOW_AVAILABILITY",
    "ComparisonReport",
    "Histogram",
    "RunStats",
    "availability_cdf",
    "bucket_values",
    "compare_runs",
    "fraction_below",
    "run_stats",
    "run_summary",
    "scott_bucket_count",
    # errors
    "GroupingError",
    "ConfigError",
    "ConfigMismatch",
    "DegenerateSample",
    "EmptyInput",
    "EmptyRoster",
    "InvalidAlpha",
    "InvalidParams",
    "LengthMismatch",
    "NoConvergence",
    "NotAMember",
    "OutOfRange",
    "SizeExceeded",
    "StaleCandidate",
    "TopologyInfeasible",
]

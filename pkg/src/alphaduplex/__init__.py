"""Joint power and spectrum-overlap optimization for cellular networks.

The package simulates a multi-cell network in which uplink and downlink
share spectrum through a tunable per-cell overlap fraction alpha, and
optimizes transmit powers together with alpha by a log-barrier interior
point method.  Four schemes are compared: joint adaptive overlap, pinned
half duplex (alpha=0), pinned full duplex (alpha=1), and a fixed-power
fixed-overlap baseline.
"""

from .errors import (
    AlphaDuplexError,
    ConfigurationError,
    DegreeInsufficientError,
    InfeasiblePointError,
    InfeasibleSpecError,
    InvalidParameterError,
    QuadratureError,
    StalledLineSearchError,
    UtilityDomainError,
)
from .overlap import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_ALPHA_MIN,
    PulseKind,
    PulseOverlapProfile,
    PulseSpec,
    build_profile,
    cross_factor_downlink,
    cross_factor_uplink,
    default_profile,
    factors_table,
    pulse_amplitude,
)
from .scenario import (
    FadingModel,
    NetworkRealization,
    SystemParams,
    drop_users,
    generate_topology,
    pathloss_gain,
    realize,
    realize_channels,
)
from .links import (
    DecisionVector,
    Direction,
    LinkEvaluator,
    LinkMetrics,
    UtilityKind,
    downlink_sinr,
    link_metrics,
    link_rate,
    uplink_sinr,
    utility,
    utility_gradient,
)
from .ipm import (
    BarrierProblem,
    OptimizationResult,
    ProblemSpec,
    SolverOptions,
    backtracking_line_search,
    barrier_objective,
    clamp_to_interior,
    find_feasible_start,
    is_strictly_feasible,
    multi_start_solve,
    newton_step,
    solve,
)
from .schemes import (
    SchemeConfig,
    SchemeKind,
    SchemeResult,
    compare_all,
    run_scheme,
)
from .harness import (
    CSV_HEADER,
    DEFAULT_RATIO_GRID,
    DropRecord,
    ExperimentConfig,
    SweepRecord,
    alpha_histogram,
    csv_text,
    emit_csv,
    run_sweep,
)
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "AlphaDuplexError",
    "ConfigurationError",
    "DegreeInsufficientError",
    "InfeasiblePointError",
    "InfeasibleSpecError",
    "InvalidParameterError",
    "QuadratureError",
    "StalledLineSearchError",
    "UtilityDomainError",
    "DEFAULT_ALPHA_GRID",
    "DEFAULT_ALPHA_MIN",
    "PulseKind",
    "PulseOverlapProfile",
    "PulseSpec",
    "build_profile",
    "cross_factor_downlink",
    "cross_factor_uplink",
    "default_profile",
    "factors_table",
    "pulse_amplitude",
    "FadingModel",
    "NetworkRealization",
    "SystemParams",
    "drop_users",
    "generate_topology",
    "pathloss_gain",
    "realize",
    "realize_channels",
    "DecisionVector",
    "Direction",
    "LinkEvaluator",
    "LinkMetrics",
    "UtilityKind",
    "downlink_sinr",
    "link_metrics",
    "link_rate",
    "uplink_sinr",
    "utility",
    "utility_gradient",
    "BarrierProblem",
    "OptimizationResult",
    "ProblemSpec",
    "SolverOptions",
    "backtracking_line_search",
    "barrier_objective",
    "clamp_to_interior",
    "find_feasible_start",
    "is_strictly_feasible",
    "multi_start_solve",
    "newton_step",
    "solve",
    "SchemeConfig",
    "SchemeKind",
    "SchemeResult",
    "compare_all",
    "run_scheme",
    "CSV_HEADER",
    "DEFAULT_RATIO_GRID",
    "DropRecord",
    "ExperimentConfig",
    "SweepRecord",
    "alpha_histogram",
    "csv_text",
    "emit_csv",
    "run_sweep",
    "cli_main",
    "__version__",
]

"""syncflow: simulation and verification of synchronization for diffusively
coupled networks whose node self-dynamics are negative gradients of convex
potentials, under fixed or switching directed communication graphs."""

from .analysis import (
    DiagnosticsSeries,
    SweepResult,
    SyncVerdict,
    aggregate_potential,
    check_common_limit,
    check_feasibility,
    check_invariant_cube,
    check_monotone,
    check_node_optimum,
    check_spectral_bound,
    check_sync_iff,
    diagnostics,
    minimize_aggregate,
    sweep_K,
    sync_verdict,
)
from .convex_geometry import (
    Box,
    ConvexBody,
    Hull,
    Interval1D,
    Point,
    check_drift_alignment,
    check_distance_comparison,
    distance,
    intersect,
    project,
    zero_set_hull,
)
from .errors import (
    AssumptionViolationError,
    ConfigurationError,
    FiniteEscapeError,
    InputError,
    NumericalError,
    PreconditionError,
    SyncflowError,
    RepresentationError,
)
from .graphs import (
    FixedSchedule,
    JointGraph,
    PeriodicSchedule,
    SwitchingSignal,
    UJSCCertificate,
    WeightedDigraph,
    certify_ujsc,
    is_strongly_connected,
    jacobi_eigenvalues,
    joint_graph,
    lambda2,
    laplacian,
)
from .potentials import (
    FlatBottom1D,
    Potential,
    Quadratic,
    QuarticWell,
    SumPotential,
    common_zero_set,
    eval_potential,
    eval_self_dynamics,
    gradient_consistency_check,
    zero_set,
)
from .report import CheckReport
from .simulator import (
    NetworkState,
    Trajectory,
    equilibrium_oracle_quadratic,
    fixed_signal,
    integrate,
    rhs,
)

__version__ = "0.1.0"

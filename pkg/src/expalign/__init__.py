"""Planning toolkit for detecting and resolving reward misspecification.

The specified reward is mined for avoid/visit candidate supersets through
occupancy-frequency linear programs; a query loop then refines them against a
human (or scripted oracle) until a policy satisfying the confirmed
expectations exists in the robot's model, or none can.
"""

from .mdp import (
    Cmp,
    DEFAULT_TOLERANCES,
    Domain,
    ExpectationElement,
    NoisyRationalPlanning,
    OccupancyVector,
    OptimalPlanning,
    Policy,
    RewardFunction,
    Tolerances,
    brute_force_optimal_set,
    check_expectation,
    evaluate_policy,
    is_expectation_aligned,
    occupancy_of_policy,
)
from .formulations import (
    DEFAULT_PARAMS,
    FormulationParams,
    SupersetResult,
    build_query_lp,
    compute_supersets,
    extract_policy,
    is_human_sufficient,
    is_misspecified,
    solve_optimal,
    test_forbidden_candidate,
    test_goal_candidate,
)
from .query import (
    GroundTruthOracle,
    OracleAnswer,
    QueryKind,
    QuerySession,
    SessionStatus,
    run_to_completion,
    start_session,
    step,
)
from .benchmarks import BenchmarkInstance, deserialize, fixtures, generate, serialize
from .ird import BaselineOutcome, run_ird

__version__ = "0.1.0"

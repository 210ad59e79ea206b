"""Solver library for finite multistage games with noisy signals.

Behavior is represented by strategic measures (distributions over a
player's own signal/action trajectories with base-measure-distributed
signals); sequential equilibria are computed as limits of conditionally
near-optimal profiles with positive reach on all relevant sets.
"""

from .errors import (
    GameSpecError,
    GridTooCoarseError,
    MeasureInvariantError,
    NonConvergenceError,
    NormalizationError,
    NoTailBoundError,
    NoTailBoundSumError,
    ParseError,
    SeqMeasError,
    SizeCapExceededError,
    ZeroReachError,
)
from .model import (
    Correspondence,
    DensityTable,
    GameSpec,
    Grid,
    PrivateHistory,
    TailBound,
    ValidatedGame,
    available_actions,
    enumerate_information_sets,
    truncate_horizon,
    validate_game,
)
from .measures import (
    BehaviorStrategy,
    ContinuationConstraints,
    PartialBehaviorStrategy,
    StrategicMeasure,
    UNCONSTRAINED,
    continuation_polytope,
    full_support_profile,
    full_support_strategy,
    induce_measure,
    is_continuation,
    measure_to_strategy,
    mix,
    prefix_marginal,
    profile_distance,
    total_variation,
    validate_measure,
)
from .engine import (
    PlayDistribution,
    conditional_payoff,
    expected_payoff,
    fold_densities,
    play_distribution,
)
from .relevance import (
    ReachReport,
    RelevantSet,
    all_atomic_relevant_sets,
    assert_full_support_reach,
    atomic_relevant_sets,
    reach_probability,
)
from .solver import (
    ACCEPT,
    INCONCLUSIVE,
    REJECT,
    CheckResult,
    RestrictedSpace,
    SeqEqCertificate,
    best_continuation,
    check_sequential,
    conditional_gap_report,
    epsilon_optimal_at,
    nash_gap,
    polish_profile,
    restricted_nash,
    sequential_equilibrium,
)
from .library import (
    DuopolyParams,
    build_duopoly,
    build_example,
    duopoly_analytics,
    first_mover_check,
)
from .specfile import (
    load_game,
    parse_game,
    parse_profile,
    serialize_game,
    serialize_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

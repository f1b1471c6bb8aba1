"""Channel assignment for cognitive radio networks.

Library and simulator for sharing L licensed channels among K secondary
pairs: a coordinator-mediated stable matching protocol, a synchronized
English auction reaching (approximate) Walrasian equilibria, and
centralized baselines, all over a common fading and sensing model.
"""

from . import _backend
from .assign import AssignmentProblem, brute_force_assign, hungarian_assign, matching_welfare, random_matching
from .channel import (
    ChannelRealization,
    ScenarioConfig,
    SensingProfile,
    UtilityTables,
    access_probability,
    build_sensing_profile,
    build_utility_tables,
    detection_probability,
    detector_threshold,
    false_alarm_probability,
    generate_realization,
    pu_utility,
    pu_utility_free,
    q_function,
    q_inverse,
    su_rate,
    su_sum_rate,
    trial_generator,
)
from .harness import MECHANISMS, TrialRecord, invariant_suite, run_experiment, sweep, write_records
from .market import (
    AuctionState,
    WalrasOutcome,
    compute_demand,
    excess_demand,
    gross_substitutes_check,
    net_utility,
    requirement,
    run_english_auction,
    satiated_utility,
    single_channel_values,
    verify_walrasian,
)
from .matching import (
    CoordinatorState,
    Matching,
    MessageLog,
    find_blocking_pairs,
    is_individually_rational,
    is_stable,
    run_stable_matching,
    verify_unique_pu_optimal,
    worst_case_bits,
)

__version__ = "0.1.0"


def backend() -> str:
    """Name of the auction kernel in use, 'cython' or 'python'."""
    return _backend.default_backend()

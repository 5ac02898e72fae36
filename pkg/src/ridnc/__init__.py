"""Random instantly decodable network coding (RIDNC) for broadcast packet
recovery: the RACE degree planner, baseline encoders and a Monte-Carlo
erasure-channel harness."""

from ridnc.baselines import (
    OracleResult,
    WantMatrix,
    brute_force_best_code,
    crowdwifi_encode,
    optimal_ridnc_degree,
)
from ridnc.channel import (
    CodedPacket,
    ErasureProfile,
    ReceptionState,
    collect_feedback_by_id,
    collect_feedback_by_prob,
    deliver_coded,
    run_initial_phase,
    sample_erasure_profile,
)
from ridnc.combinatorics import (
    ConfigurationError,
    PiMatrix,
    binomial,
    build_pi_matrix,
    posterior_reception_mean,
    recovery_prob,
)
from ridnc.harness import GainReport, ScenarioConfig, find_cross_point, measure_speedup, run_scenario, sweep
from ridnc.race import (
    BeliefMatrix,
    DegreePlan,
    FeedbackHistogram,
    belief_expected_gain,
    belief_from_feedback,
    build_coded_packet,
    estimate_degree_first,
    expected_gain_first,
    histogram_from_feedback,
    plan_degrees,
)

__version__ = "0.1.0"

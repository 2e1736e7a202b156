"""Reconstruction of circular binary strings from deletion-channel traces.

Subpackages by concern:

* channel    - the rotate-then-delete channel, exact small-n law, padding
* estimator  - complex-weight unbiased estimators and the distinguisher
* cyclotomic - root-of-unity separation and the ratio-condition verifier
* kmer       - k-mer census recovery and the average-case reconstructor
* oracle     - brute-force cross-checks, the three-ones family, lower bounds
* cli        - the `cyclotrace` command
"""

from .backend import BACKEND_NAME
from .bits import Bits, all_bits, necklaces
from .channel import (
    DEFAULT_SEED,
    ChannelParams,
    CircularString,
    ExactTraceDistribution,
    Trace,
    TraceBatch,
    exact_trace_distribution,
    generate_trace,
    generate_traces,
    pad_linear,
    unpad,
)
from .cyclotomic import (
    NtResult,
    check_ratio_condition,
    counterexample,
    counterexample_checks,
    find_separating_root,
    verify_theorem_nt,
)
from .estimator import (
    DistinguishConfig,
    DistinguishResult,
    EstimatorQuery,
    Q_t_exact,
    UnitPoint,
    all_chains,
    distinguish,
    eval_P,
    f_chain,
    g_m,
    h_t,
    h_t_average,
    root_of_unity,
    suggested_trace_count,
    worst_case_reconstruct,
)
from .kmer import (
    KmerCensus,
    KmerConfig,
    KmerProfile,
    average_case_reconstruct,
    boost_deletion,
    default_k,
    distinguish_profiles,
    estimate_start_prob,
    glue_census,
    kmer_profile_exact,
    recover_c0,
    recover_census,
    regularity_check,
    start_prob_exact,
)
from .oracle import (
    ThreeOnesDistances,
    ThreeOnesFamily,
    conditional_equidistribution_check,
    gap_profile_weight,
    hellinger,
    hellinger_three_ones,
    ml_distinguish_oracle,
    s1_minus_s2,
    s1_s2_antisymmetry_check,
    sample_lower_bound,
    three_ones_prob,
    total_variation,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "Bits",
    "ChannelParams",
    "CircularString",
    "DEFAULT_SEED",
    "DistinguishConfig",
    "DistinguishResult",
    "EstimatorQuery",
    "ExactTraceDistribution",
    "KmerCensus",
    "KmerConfig",
    "KmerProfile",
    "NtResult",
    "Q_t_exact",
    "ThreeOnesDistances",
    "ThreeOnesFamily",
    "Trace",
    "TraceBatch",
    "UnitPoint",
    "all_bits",
    "all_chains",
    "average_case_reconstruct",
    "boost_deletion",
    "check_ratio_condition",
    "conditional_equidistribution_check",
    "counterexample",
    "counterexample_checks",
    "default_k",
    "distinguish",
    "distinguish_profiles",
    "estimate_start_prob",
    "eval_P",
    "exact_trace_distribution",
    "f_chain",
    "find_separating_root",
    "g_m",
    "gap_profile_weight",
    "generate_trace",
    "generate_traces",
    "glue_census",
    "h_t",
    "h_t_average",
    "hellinger",
    "hellinger_three_ones",
    "kmer_profile_exact",
    "ml_distinguish_oracle",
    "necklaces",
    "pad_linear",
    "recover_c0",
    "recover_census",
    "regularity_check",
    "root_of_unity",
    "s1_minus_s2",
    "s1_s2_antisymmetry_check",
    "sample_lower_bound",
    "start_prob_exact",
    "suggested_trace_count",
    "three_ones_prob",
    "total_variation",
    "unpad",
    "verify_theorem_nt",
    "worst_case_reconstruct",
]

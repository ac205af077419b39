"""Numerical laboratory for block-fading links cut off by a random fatal attack.

Single-link outage (exact, bounded, approximated), optimal coding length,
convex power allocation, Monte Carlo ground truth, and large-N asymptotics
for parallel sub-channels.
"""

from .channel_model import (
    EmpiricalAttack,
    ExponentialAttack,
    IdenticalFading,
    LogNormalFading,
    NeverAttack,
    PowerVector,
    RayleighFading,
    RngStream,
    WeightVector,
    block_weights,
    mutual_information,
    sample_fading,
    sample_surviving_blocks,
    surviving_moments,
)
from .analytic_single import (
    HighSnrSummary,
    SingleChannelConfig,
    exact_outage_k1,
    high_snr_outage,
    low_snr_threshold,
    optimal_k_high_snr,
    outage_lower_bound,
    outage_upper_bound,
)
from .monte_carlo import (
    CapacityResult,
    OutageEstimate,
    UniformPowerEvaluator,
    estimate_outage_parallel,
    estimate_outage_parallel_mdep,
    estimate_outage_single,
    outage_capacity_search,
    repetition_equivalence_check,
)
from .parallel_asym import (
    ExponentResult,
    ParallelConfig,
    YMoments,
    gaussian_outage_indep,
    gaussian_outage_mdep,
    mgf_Y,
    nu_m,
    outage_exponent_indep,
    outage_exponent_mdep,
    y_moments,
)
from .power_alloc import (
    BruteObjective,
    HighSnrProgram,
    OptimizedPowerEvaluator,
    SolveReport,
    SolveStatus,
    brute_force_power,
    check_monotone_cone,
    hessian_psd_probe,
    identical_fading_k1_check,
    joint_optimize,
    solve_high_snr_rayleigh,
    solve_lognormal_upper,
)

__version__ = "0.1.0"

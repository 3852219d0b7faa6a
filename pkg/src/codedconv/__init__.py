"""Coded distributed convolution under straggling workers."""

from .analytics import (
    ExponentReport,
    alpha_threshold,
    best_s,
    complexity_ratio,
    epsilon,
    epsilon_replication,
    fit_tail_slope,
    heuristic_E,
    heuristic_E_prime,
    theorem5_ratio,
)
from .conv import (
    CostModel,
    convolve_direct,
    convolve_fft,
    convolve_overlap_add,
    cost_scenario1,
    cost_scenario2,
    shift_add_combine,
)
from .engine import CompletionOrder, ExecutionResult, execute, reconstruct
from .errors import CodedConvError, IllConditionedError, InvalidArgumentError
from .mds import DecoderMatrix, VandermondeCode, decode_group, encode, make_code, make_decoder
from .planner import (
    ExecutionPlan,
    ProblemSpec,
    Strategy,
    appendix_a_costs,
    brute_force_worst_case_k,
    plan_coded,
    plan_replication,
    plan_uncoded,
)
from .straggler import (
    CompletionTrace,
    TimeModel,
    cdf,
    monte_carlo_tail,
    sample_time,
    simulate_trace,
    strategy_finish_time,
    task_shift,
)

__version__ = "0.1.0"

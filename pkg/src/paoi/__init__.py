"""Weighted peak-age evaluation and policy optimization for multi-source
edge-computing pipelines: closed-form evaluators, frequency/threshold and
sampling-function optimizers, a discrete-event simulator, and an experiment
harness behind the ``paoi`` CLI."""

from .analytic import (
    AnalyticResult,
    SourceTerms,
    delivered_sojourn,
    delivery_prob,
    mean_Z_p,
    mean_cycle_np,
    mean_wait_np,
    paoi_np,
    paoi_p,
)
from .alternating import OptTrace, solve_np, solve_p
from .dinkelbach import DinkelbachState, p_of_c, pointwise_argmin, pointwise_objective, solve_g_m
from .distributions import (
    DistributionSpec,
    RngStream,
    deterministic,
    expected_excess,
    exponential,
    gamma,
    lognormal,
    mean,
    pareto,
    parse_distribution,
    sample,
    success_prob_pointwise,
    truncated_mean,
)
from .errors import (
    ConfigError,
    IncompatiblePolicyError,
    InsufficientDeliveriesError,
    NonConvergenceError,
    PaoiError,
)
from .freq_opt import optimal_f_np, optimal_f_p
from .harness import ExperimentSpec, load_preset, preset_names, run_experiment, validate_config
from .simulator import (
    FixedThresholdSampler,
    MaxAgeFirst,
    RandomScheduler,
    SimResult,
    TransmissionAwareSampler,
    WeightedRoundRobin,
    ZeroWaitSampler,
    realized_stats,
    run,
)
from .system import FreqVector, PiecewiseFn, ServerMode, SystemConfig, ThresholdVector
from .threshold_opt import optimize_all_thresholds, optimize_threshold, threshold_objective

__version__ = "0.1.0"

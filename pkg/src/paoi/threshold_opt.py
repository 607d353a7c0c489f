"""Per-source sampling-threshold optimization, non-preemptive server.

With frequencies fixed, the threshold-dependent part of the weighted
peak-age total splits into independent single-source terms

    J_m(theta) = w_m Wbar(theta) + f_m [Wbar(theta) + E[min{C, theta}]] B,
    B = sum_n w_n / f_n,

so each source solves a 1-D problem on [0, theta_max].  The objective can be
non-convex, hence the grid-plus-golden search; the search cap theta_max is
the 1 - 1e-6 quantile of the computation time, beyond which min{C, theta}
and the wait are saturated to within tail mass.
"""

from __future__ import annotations

import numpy as np

from . import analytic
from . import distributions as dists
from .errors import ConfigError
from .search import minimize_on_grid
from .system import FreqVector, ServerMode, SystemConfig, ThresholdVector

__all__ = ["threshold_objective", "optimize_threshold", "optimize_all_thresholds", "theta_search_cap"]

_N_GRID = 256
_REFINE_TOL = 1e-8


def theta_search_cap(config: SystemConfig) -> float:
    return dists.quantile(config.c_dist, 1.0 - 1e-6)


def _check(config: SystemConfig, f: FreqVector, m: int):
    if config.mode is not ServerMode.NON_PREEMPTIVE:
        raise ConfigError("threshold optimization applies to non-preemptive configs")
    if len(f) != config.n_sources:
        raise ConfigError("frequency vector length does not match source count")
    if not 0 <= m < config.n_sources:
        raise ConfigError(f"source index {m} out of range")


def threshold_objective(config: SystemConfig, f: FreqVector, m: int, theta_m: float) -> float:
    """Value of source m's threshold subproblem at theta_m."""
    _check(config, f, m)
    if theta_m < 0:
        raise ValueError("theta must be >= 0")
    wbar = analytic.mean_wait_np(config, theta_m)
    capped = dists.truncated_mean(config.c_dist, theta_m)
    b_sum = sum(w / fm for w, fm in zip(config.weights, f))
    return config.weights[m] * wbar + f[m] * (wbar + capped) * b_sum


def optimize_threshold(config: SystemConfig, f: FreqVector, m: int):
    """Minimize source m's subproblem; returns (theta_m, objective value)."""
    _check(config, f, m)
    return minimize_on_grid(
        lambda th: threshold_objective(config, f, m, th),
        0.0,
        theta_search_cap(config),
        n_grid=_N_GRID,
        refine_tol=_REFINE_TOL,
    )


def optimize_all_thresholds(config: SystemConfig, f: FreqVector) -> ThresholdVector:
    """Solve the M independent subproblems; identical sources share work."""
    _check(config, f, 0)
    cache: dict[tuple[float, float], float] = {}
    out = []
    for m in range(config.n_sources):
        key = (config.weights[m], f[m])
        if key not in cache:
            cache[key], _ = optimize_threshold(config, f, m)
        out.append(cache[key])
    return ThresholdVector(tuple(out))

"""Closed-form scheduling frequencies for a fixed sampler.

Both server modes admit the same square-root structure: the stationarity
system of the weighted peak-age objective over the frequency simplex is
solved by

    non-preemptive:  f_m  proportional to  sqrt(w_m / Zbar_m)
    preemptive:      f_m  proportional to  sqrt(w_m / (p_m (G_m + E[T])))

with Zbar_m the per-source mean cycle, p_m the delivery probability and
G_m = E[min{C, g_m(T)}].  These are in fact global minimizers over f for the
fixed sampler (Cauchy-Schwarz on the product of the two linear forms), which
is what makes the alternating solver's frequency half-step monotone.
"""

from __future__ import annotations

import numpy as np

from . import analytic
from . import distributions as dists
from .errors import ConfigError
from .system import FreqVector, PiecewiseFn, ServerMode, SystemConfig, ThresholdVector

__all__ = [
    "optimal_f_np",
    "optimal_f_p",
    "kkt_residual_np",
    "kkt_residual_p",
]


def _np_denominators(config: SystemConfig, theta: ThresholdVector) -> np.ndarray:
    return np.asarray([analytic.mean_cycle_np(config, th) for th in theta])


def optimal_f_np(config: SystemConfig, theta: ThresholdVector) -> FreqVector:
    """Optimal frequencies for a non-preemptive threshold sampler."""
    if config.mode is not ServerMode.NON_PREEMPTIVE:
        raise ConfigError("optimal_f_np requires a non-preemptive config")
    if len(theta) != config.n_sources:
        raise ConfigError("threshold vector length does not match source count")
    w = np.asarray(config.weights)
    return FreqVector.normalized(np.sqrt(w / _np_denominators(config, theta)))


def _p_denominators(config: SystemConfig, g: list[PiecewiseFn]) -> np.ndarray:
    e_t = config.mean_t
    out = []
    for gm in g:
        p_m = analytic.delivery_prob(config, gm)
        g_cap = analytic.capped_compute_p(config, gm)
        out.append(p_m * (g_cap + e_t))
    return np.asarray(out)


def optimal_f_p(config: SystemConfig, g: list[PiecewiseFn]) -> FreqVector:
    """Optimal frequencies for a preemptive transmission-aware sampler."""
    if config.mode is not ServerMode.PREEMPTIVE:
        raise ConfigError("optimal_f_p requires a preemptive config")
    if len(g) != config.n_sources:
        raise ConfigError("sampling function list length does not match source count")
    w = np.asarray(config.weights)
    return FreqVector.normalized(np.sqrt(w / _p_denominators(config, g)))


def kkt_residual_np(config: SystemConfig, f: FreqVector, theta: ThresholdVector) -> float:
    """Max |stationarity residual| of the frequency problem at f.

    Uses the interior multiplier mu = E[T] * sum_n w_n / f_n; the closed-form
    solution must drive this to zero.
    """
    w = np.asarray(config.weights)
    fa = f.as_array()
    e_t = config.mean_t
    wt = np.asarray(
        [
            analytic.mean_wait_np(config, th) + dists.truncated_mean(config.c_dist, th)
            for th in theta
        ]
    )
    a_sum = float(np.dot(fa, wt))
    b_sum = float(np.sum(w / fa))
    mu = e_t * b_sum
    resid = -e_t * w / fa**2 + wt * b_sum - (w / fa**2) * a_sum + mu
    return float(np.max(np.abs(resid)))


def kkt_residual_p(config: SystemConfig, f: FreqVector, g: list[PiecewiseFn]) -> float:
    """Max |stationarity residual| of the preemptive frequency problem at f."""
    w = np.asarray(config.weights)
    fa = f.as_array()
    e_t = config.mean_t
    p = np.asarray([analytic.delivery_prob(config, gm) for gm in g])
    cap = np.asarray([analytic.capped_compute_p(config, gm) for gm in g])
    e_z = e_t + float(np.dot(fa, cap))
    b_sum = float(np.sum(w / (p * fa)))
    mu = e_t * b_sum
    resid = -(w / p) * e_z / fa**2 + cap * b_sum + mu
    return float(np.max(np.abs(resid)))

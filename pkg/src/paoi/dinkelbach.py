"""Fractional-programming solver for one source's sampling function.

With frequencies and the other sources' functions fixed, source m minimizes
the ratio F(g) / p(g) where

    F(g) = w_m { E[Z] / f_m + E[(T + C) 1{delivered}] }
    p(g) = P(C <= g(T) + T')

The standard parametric reduction solves, for a parameter c >= 0,

    p(c) = min_g  F(g) - c * p(g)

whose inner minimization separates pointwise in the observed transmission
time: dropping terms constant in g, the integrand at T = t and g value gamma
is

    h(gamma; t, c) = w_m [ E[min{C, gamma}] + t q(gamma) + e(gamma) ]
                     - c q(gamma)

with q(gamma) = P(C <= gamma + T') and e(gamma) = E[C 1{C <= gamma + T'}].
p(c) is nonincreasing in c; iterating c <- F(g_c) / p(g_c) from the
zero-function ratio drives p(c) to zero from below, and the fixed point is
the optimal ratio.  g is represented on a log-spaced transmission-time grid
(64 knots between the 1e-4 and 1 - 1e-4 quantiles) with constant extension;
the per-knot minimizations reuse the grid-plus-golden search engine on
[0, gamma_max] with gamma_max the 1 - 1e-6 quantile of C.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analytic
from . import distributions as dists
from .errors import ConfigError, NonConvergenceError
from .search import minimize_on_grid
from .system import FreqVector, PiecewiseFn, ServerMode, SystemConfig

__all__ = [
    "DinkelbachState",
    "default_t_grid",
    "zero_sampler",
    "pointwise_objective",
    "pointwise_argmin",
    "p_of_c",
    "solve_g_m",
]

_T_GRID_SIZE = 64
_GRID_STRIDE = 8  # pointwise scan uses every 8th kernel table knot (257 points)
_REFINE_TOL = 1e-8
_MAX_ITERS = 50


@dataclass
class DinkelbachState:
    """Progress of one ratio iteration."""

    c: float
    p_value: float
    iterations: int
    converged: bool


def default_t_grid(t_dist: dists.DistributionSpec, n: int = _T_GRID_SIZE) -> np.ndarray:
    """Log-spaced transmission-time knots between the 1e-4 tails."""
    if t_dist.is_deterministic:
        return np.asarray([t_dist.params[0]])
    lo = dists.quantile(t_dist, 1e-4)
    hi = dists.quantile(t_dist, 1.0 - 1e-4)
    if hi - lo < 1e-12:
        return np.asarray([0.5 * (lo + hi)])
    return np.geomspace(lo, hi, n)


def zero_sampler(t_dist: dists.DistributionSpec, n: int = _T_GRID_SIZE) -> PiecewiseFn:
    """The zero-wait sampling function on the default grid."""
    grid = default_t_grid(t_dist, n)
    return PiecewiseFn(grid, np.zeros_like(grid))


def _check(config: SystemConfig, f: FreqVector, g_all, m: int):
    if config.mode is not ServerMode.PREEMPTIVE:
        raise ConfigError("the ratio solver applies to preemptive configs")
    if len(f) != config.n_sources or len(g_all) != config.n_sources:
        raise ConfigError("frequency/sampler lengths must match the source count")
    if not 0 <= m < config.n_sources:
        raise ConfigError(f"source index {m} out of range")


def pointwise_objective(
    config: SystemConfig,
    f: FreqVector,
    g_others,
    m: int,
    t: float,
    gamma: float,
    c: float,
) -> float:
    """Integrand of F - c * p at transmission time t and g value gamma.

    Terms constant in gamma (the other sources' share of E[Z] and E[T]) are
    dropped; they shift p(c) but not the per-t argmin, and `p_of_c` restores
    them when it scores a candidate.
    """
    _check(config, f, g_others, m)
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    k = analytic.kernel_for(config.c_dist, config.t_dist)
    w_m = config.weights[m]
    return float(w_m * (k.tm(gamma) + t * k.q(gamma) + k.e(gamma)) - c * k.q(gamma))


def _argmin_gamma(kernel: analytic.Kernel, w_m: float, t: float, c: float) -> float:
    grid = kernel.gamma_grid[::_GRID_STRIDE]
    vals = w_m * (kernel.tm_tab[::_GRID_STRIDE] + t * kernel.q_tab[::_GRID_STRIDE] + kernel.e_tab[::_GRID_STRIDE]) - c * kernel.q_tab[::_GRID_STRIDE]

    def h(gamma: float) -> float:
        return float(w_m * (kernel.tm(gamma) + t * kernel.q(gamma) + kernel.e(gamma)) - c * kernel.q(gamma))

    x, _ = minimize_on_grid(
        h, 0.0, kernel.gamma_max, refine_tol=_REFINE_TOL, grid_values=(grid, vals)
    )
    return x


def pointwise_argmin(
    config: SystemConfig, f: FreqVector, g_others, m: int, t: float, c: float
) -> float:
    """Best g value at transmission time t for ratio parameter c."""
    _check(config, f, g_others, m)
    k = analytic.kernel_for(config.c_dist, config.t_dist)
    return _argmin_gamma(k, config.weights[m], t, c)


def _f_and_p(config: SystemConfig, f: FreqVector, g_all, m: int):
    """Subproblem numerator F and delivery probability p for source m."""
    e_z = analytic.mean_Z_p(config, f, list(g_all))
    s_m = analytic.delivered_sojourn(config, g_all[m])
    p_m = analytic.delivery_prob(config, g_all[m])
    f_val = config.weights[m] * (e_z / f[m] + s_m)
    return f_val, p_m


def p_of_c(
    config: SystemConfig,
    f: FreqVector,
    g_others,
    m: int,
    c: float,
    t_grid: np.ndarray | None = None,
):
    """Inner minimization value p(c) and its minimizing sampling function."""
    _check(config, f, g_others, m)
    if c < 0:
        raise ValueError("c must be >= 0")
    k = analytic.kernel_for(config.c_dist, config.t_dist)
    grid = default_t_grid(config.t_dist) if t_grid is None else np.asarray(t_grid, dtype=float)
    w_m = config.weights[m]
    values = np.asarray([_argmin_gamma(k, w_m, t, c) for t in grid])
    g_cand = PiecewiseFn(grid, values)
    g_all = list(g_others)
    g_all[m] = g_cand
    f_val, p_m = _f_and_p(config, f, g_all, m)
    return f_val - c * p_m, g_cand


def solve_g_m(
    config: SystemConfig,
    f: FreqVector,
    g_others,
    m: int,
    delta: float | None = None,
    max_iters: int = _MAX_ITERS,
    t_grid: np.ndarray | None = None,
    full_output: bool = False,
):
    """Optimal sampling function for source m with the others held fixed.

    Starts from the zero-function ratio (so the first p(c) is already <= 0)
    and iterates c <- F/p until |p(c)| <= delta.  Returns (g, c), or
    (g, c, DinkelbachState) with ``full_output``.  Raises NonConvergenceError
    past ``max_iters``, which in practice signals a too-coarse grid.
    """
    _check(config, f, g_others, m)
    grid = default_t_grid(config.t_dist) if t_grid is None else np.asarray(t_grid, dtype=float)
    g_zero = PiecewiseFn(grid, np.zeros_like(grid))
    g_all = list(g_others)
    g_all[m] = g_zero
    f0, p0 = _f_and_p(config, f, g_all, m)
    c = f0 / p0
    if delta is None:
        delta = 1e-8 * f0
    for it in range(1, max_iters + 1):
        k = analytic.kernel_for(config.c_dist, config.t_dist)
        w_m = config.weights[m]
        values = np.asarray([_argmin_gamma(k, w_m, t, c) for t in grid])
        g_cand = PiecewiseFn(grid, values)
        g_all[m] = g_cand
        f_val, p_m = _f_and_p(config, f, g_all, m)
        p_c = f_val - c * p_m
        if abs(p_c) <= delta:
            state = DinkelbachState(c=c, p_value=p_c, iterations=it, converged=True)
            return (g_cand, c, state) if full_output else (g_cand, c)
        c = f_val / p_m
    raise NonConvergenceError(
        f"ratio iteration for source {m} did not reach |p(c)| <= {delta:g} "
        f"within {max_iters} iterations"
    )

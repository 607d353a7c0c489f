"""Top-level alternating solvers for both server modes.

Each outer iteration updates the scheduling frequencies in closed form (a
global minimizer for the fixed sampler, so that half-step can only descend)
and then re-optimizes the sampler with frequencies fixed.  The
non-preemptive sampler step solves the M independent threshold subproblems;
the preemptive step runs one coordinate-descent sweep of the per-source
ratio solver.  Every candidate parameter update is kept only if it does not
increase the weighted total, which makes the sampler half-step monotone as
well (the preemptive per-source subproblem ignores its effect on the other
sources' inter-generation term, so an unguarded sweep could in principle
backtrack).

The loop stops when the total improves by less than eps, which defaults to
1e-6 * (E[T] + E[C]).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import analytic, dinkelbach, freq_opt, threshold_opt
from .errors import ConfigError
from .system import FreqVector, PiecewiseFn, ServerMode, SystemConfig, ThresholdVector

__all__ = ["OptTrace", "TracePoint", "solve_np", "solve_p"]

_MAX_ITERS = 100


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    phase: str  # "init" | "freq" | "sampler"
    paoi: float
    f: tuple[float, ...]
    sampler_params: tuple  # thetas, or per-source g knot values


@dataclass
class OptTrace:
    points: list[TracePoint] = field(default_factory=list)
    converged: bool = False
    tolerance: float = float("nan")
    achieved: float = float("nan")

    @property
    def n_iterations(self) -> int:
        return max((p.iteration for p in self.points), default=0)

    @property
    def final_paoi(self) -> float:
        return self.points[-1].paoi

    def record(self, iteration, phase, paoi, f, sampler_params):
        self.points.append(
            TracePoint(iteration, phase, paoi, tuple(f), tuple(sampler_params))
        )

    def paoi_values(self) -> list[float]:
        return [p.paoi for p in self.points]

    def to_csv(self) -> str:
        """Flattened trace: iteration, phase, paoi, f_*, then sampler params."""
        buf = io.StringIO()
        n_f = len(self.points[0].f)
        p0 = np.asarray(self.points[0].sampler_params, dtype=float).ravel()
        f_cols = ",".join(f"f_{i + 1}" for i in range(n_f))
        s_cols = ",".join(f"param_{i + 1}" for i in range(p0.size))
        buf.write(f"iteration,phase,paoi,{f_cols},{s_cols}\n")
        for p in self.points:
            flat = np.asarray(p.sampler_params, dtype=float).ravel()
            row = [str(p.iteration), p.phase, repr(p.paoi)]
            row += [repr(x) for x in p.f]
            row += [repr(x) for x in flat]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def _default_eps(config: SystemConfig) -> float:
    return 1e-6 * (config.mean_t + config.mean_c)


def solve_np(
    config: SystemConfig,
    eps: float | None = None,
    max_iters: int = _MAX_ITERS,
    f_init: FreqVector | None = None,
    theta_init: ThresholdVector | None = None,
):
    """Jointly optimize frequencies and thresholds, non-preemptive server.

    Returns (f, theta, trace); trace.converged is False when the iteration
    cap was hit, in which case the best parameters seen so far are returned.
    """
    if config.mode is not ServerMode.NON_PREEMPTIVE:
        raise ConfigError("solve_np requires a non-preemptive config")
    eps = _default_eps(config) if eps is None else eps
    if eps <= 0:
        raise ConfigError("eps must be > 0")
    m_src = config.n_sources
    f = f_init or FreqVector.uniform(m_src)
    theta = theta_init or ThresholdVector.zeros(m_src)
    trace = OptTrace(tolerance=eps)
    paoi = analytic.paoi_np(config, f, theta).total
    trace.record(0, "init", paoi, f, theta)
    for it in range(1, max_iters + 1):
        paoi_old = paoi
        f = freq_opt.optimal_f_np(config, theta)
        paoi = analytic.paoi_np(config, f, theta).total
        trace.record(it, "freq", paoi, f, theta)
        new_theta = []
        for m in range(m_src):
            cand, cand_val = threshold_opt.optimize_threshold(config, f, m)
            old_val = threshold_opt.threshold_objective(config, f, m, theta[m])
            new_theta.append(cand if cand_val <= old_val else theta[m])
        theta = ThresholdVector(tuple(new_theta))
        paoi = analytic.paoi_np(config, f, theta).total
        trace.record(it, "sampler", paoi, f, theta)
        if abs(paoi_old - paoi) <= eps:
            trace.converged = True
            trace.achieved = abs(paoi_old - paoi)
            break
    else:
        trace.achieved = abs(paoi_old - paoi)
    return f, theta, trace


def _g_params(g: list[PiecewiseFn]) -> tuple:
    return tuple(tuple(gm.values.tolist()) for gm in g)


def _sampler_sweep(config, f, g, paoi, grid):
    """One sweep of the per-source ratio solver, all against the incumbent.

    Every source's subproblem is solved with the other functions fixed at the
    sweep-start state (so symmetric configs stay symmetric); acceptance then
    picks the best of the full joint step and damped blends toward it,
    keeping whatever beats the incumbent.  The per-source subproblem ignores
    its own effect on the other sources' inter-generation term, so the raw
    sweep can overshoot; the damped joint acceptance preserves monotonicity
    without getting stuck at coordinate-wise traps (e.g. the all-zero
    sampler at small E[T], where any single source raising its g alone only
    hurts).
    """
    g_new = [
        dinkelbach.solve_g_m(config, f, g, m, t_grid=grid)[0]
        for m in range(config.n_sources)
    ]
    best_g, best_paoi = g, paoi
    for alpha in (1.0, 0.5, 0.25, 0.125):
        g_try = [
            PiecewiseFn(grid, alpha * new.values + (1.0 - alpha) * old.values)
            for new, old in zip(g_new, g)
        ]
        p_try = analytic.paoi_p(config, f, g_try).total
        if p_try < best_paoi:
            best_g, best_paoi = g_try, p_try
    return best_g, best_paoi


def solve_p(
    config: SystemConfig,
    eps: float | None = None,
    max_iters: int = _MAX_ITERS,
    f_init: FreqVector | None = None,
    g_init: list[PiecewiseFn] | None = None,
    t_grid: np.ndarray | None = None,
):
    """Jointly optimize frequencies and sampling functions, preemptive server.

    Returns (f, g, trace) with g a list of per-source functions on a shared
    transmission-time grid.
    """
    if config.mode is not ServerMode.PREEMPTIVE:
        raise ConfigError("solve_p requires a preemptive config")
    eps = _default_eps(config) if eps is None else eps
    if eps <= 0:
        raise ConfigError("eps must be > 0")
    m_src = config.n_sources
    grid = (
        dinkelbach.default_t_grid(config.t_dist)
        if t_grid is None
        else np.asarray(t_grid, dtype=float)
    )
    f = f_init or FreqVector.uniform(m_src)
    if g_init is None:
        g = [PiecewiseFn(grid, np.zeros_like(grid)) for _ in range(m_src)]
    else:
        if len(g_init) != m_src:
            raise ConfigError("g_init length must match the source count")
        g = list(g_init)
    trace = OptTrace(tolerance=eps)
    paoi = analytic.paoi_p(config, f, g).total
    trace.record(0, "init", paoi, f, _g_params(g))
    for it in range(1, max_iters + 1):
        paoi_old = paoi
        f = freq_opt.optimal_f_p(config, g)
        paoi = analytic.paoi_p(config, f, g).total
        trace.record(it, "freq", paoi, f, _g_params(g))
        g, paoi = _sampler_sweep(config, f, g, paoi, grid)
        trace.record(it, "sampler", paoi, f, _g_params(g))
        if abs(paoi_old - paoi) <= eps:
            trace.converged = True
            trace.achieved = abs(paoi_old - paoi)
            break
    else:
        trace.achieved = abs(paoi_old - paoi)
    return f, g, trace

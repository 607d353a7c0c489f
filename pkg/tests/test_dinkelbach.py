"""Per-source ratio solver: pointwise objective, p(c) monotonicity, fixed point."""

import numpy as np
import pytest

from paoi import (
    FreqVector,
    PiecewiseFn,
    ServerMode,
    SystemConfig,
    analytic,
    deterministic,
    exponential,
    gamma,
)
from paoi.dinkelbach import (
    default_t_grid,
    p_of_c,
    pointwise_argmin,
    pointwise_objective,
    solve_g_m,
    zero_sampler,
)

from conftest import config_p, draw, mc_mean

EXP1 = exponential(1.0)


def _zeros(cfg):
    return [zero_sampler(cfg.t_dist)] * cfg.n_sources


def test_default_t_grid_shape():
    g = default_t_grid(exponential(5.0))
    assert g.size == 64
    assert np.all(np.diff(g) > 0)
    assert default_t_grid(deterministic(2.0)).tolist() == [2.0]


def test_pointwise_objective_zero_gamma_zero_c(preset_p):
    f = FreqVector.uniform(5)
    g0 = _zeros(preset_p)
    val = pointwise_objective(preset_p, f, g0, 0, t=0.4, gamma=0.0, c=0.0)
    assert val >= 0.0
    # matches w_m * E[(t + C) 1{C <= T'}] (tm(0) = 0)
    cs = draw(preset_p.c_dist, 10**6, seed=201)
    ths = draw(preset_p.t_dist, 10**6, seed=202)
    m, se = mc_mean((0.4 + cs) * (cs <= ths))
    assert abs(val - preset_p.weights[0] * m) <= preset_p.weights[0] * (3 * se) + 1e-4


def test_pointwise_objective_vs_mc_on_gamma_grid():
    cfg = SystemConfig((1.0,), EXP1, EXP1, ServerMode.PREEMPTIVE)
    f = FreqVector((1.0,))
    g0 = _zeros(cfg)
    cs = draw(cfg.c_dist, 10**6, seed=203)
    ths = draw(cfg.t_dist, 10**6, seed=204)
    t, c = 1.0, 0.8
    for gam in (0.0, 0.5, 1.5):
        capped, se1 = mc_mean(np.minimum(cs, gam))
        soj, se2 = mc_mean((t + cs) * (cs <= gam + ths))
        q, se3 = mc_mean((cs <= gam + ths).astype(float))
        expect = capped + soj - c * q
        got = pointwise_objective(cfg, f, g0, 0, t, gam, c)
        assert abs(got - expect) <= 3 * (se1 + se2 + c * se3) + 1e-3


def test_large_c_prefers_large_gamma(preset_p):
    f = FreqVector.uniform(5)
    g0 = _zeros(preset_p)
    gam = pointwise_argmin(preset_p, f, g0, 0, t=0.2, c=1e6)
    k = analytic.kernel_for(preset_p.c_dist, preset_p.t_dist)
    assert float(k.q(gam)) >= 0.999


def test_zero_c_prefers_zero_gamma(preset_p):
    f = FreqVector.uniform(5)
    g0 = _zeros(preset_p)
    assert pointwise_argmin(preset_p, f, g0, 0, t=0.5, c=0.0) == 0.0


def test_saturated_indicator_degenerate_case():
    cfg = SystemConfig(
        (1.0,), deterministic(2.0), deterministic(1.0), ServerMode.PREEMPTIVE
    )
    f = FreqVector((1.0,))
    # C = 1 <= gamma + T' = gamma + 2 for every gamma: delivery is certain,
    # the objective reduces to w*min{1, gamma} + const, minimized at zero
    gam = pointwise_argmin(cfg, f, _zeros(cfg), 0, t=2.0, c=0.5)
    assert gam == 0.0


def test_p_of_c_positive_at_zero_and_monotone(preset_p):
    f = FreqVector.uniform(5)
    g0 = _zeros(preset_p)
    p0, _ = p_of_c(preset_p, f, g0, 0, 0.0)
    assert p0 > 0.0
    cs = np.linspace(0.0, 2.0, 8)
    ps = [p_of_c(preset_p, f, g0, 0, c)[0] for c in cs]
    assert all(b <= a + 1e-12 for a, b in zip(ps, ps[1:]))


def test_solve_converges_fast_on_saturated_case():
    cfg = SystemConfig(
        (1.0,), deterministic(1.0), deterministic(0.1), ServerMode.PREEMPTIVE
    )
    f = FreqVector((1.0,))
    g, c, state = solve_g_m(cfg, f, _zeros(cfg), 0, full_output=True)
    assert state.converged
    assert state.iterations <= 2
    assert np.all(g.values == 0.0)
    # brute force over constant samplers confirms the ratio optimum
    ratios = []
    for gam in np.linspace(0.0, 0.12, 25):
        gc = PiecewiseFn(g.grid, np.full_like(g.grid, gam))
        ez = analytic.mean_Z_p(cfg, f, [gc])
        s = analytic.delivered_sojourn(cfg, gc)
        p = analytic.delivery_prob(cfg, gc)
        ratios.append((ez + s) / p)
    assert c <= min(ratios) + 1e-9


def test_fixed_point_ratio_identity(preset_p):
    f = FreqVector.uniform(5)
    g0 = _zeros(preset_p)
    delta = 1e-8
    g, c, state = solve_g_m(preset_p, f, g0, 2, delta=delta, full_output=True)
    g_all = list(g0)
    g_all[2] = g
    ez = analytic.mean_Z_p(preset_p, f, g_all)
    s = analytic.delivered_sojourn(preset_p, g)
    p = analytic.delivery_prob(preset_p, g)
    f_val = preset_p.weights[2] * (ez / f[2] + s)
    assert abs(f_val / p - c) <= delta / p
    assert state.iterations <= 50


def test_single_source_beats_zero_wait_and_no_preemption():
    cfg = SystemConfig((1.0,), EXP1, EXP1, ServerMode.PREEMPTIVE)
    f = FreqVector((1.0,))
    g, _ = solve_g_m(cfg, f, _zeros(cfg), 0)
    val = analytic.paoi_p(cfg, f, [g]).total
    zw = analytic.paoi_p(cfg, f, _zeros(cfg)).total
    big = PiecewiseFn(g.grid, np.full_like(g.grid, 1e9))
    nop = analytic.paoi_p(cfg, f, [big]).total
    assert val <= zw + 1e-9
    assert val <= nop + 1e-9


def test_single_source_beats_constant_family():
    cfg = SystemConfig((1.0,), EXP1, EXP1, ServerMode.PREEMPTIVE)
    f = FreqVector((1.0,))
    g, c = solve_g_m(cfg, f, _zeros(cfg), 0)
    val = analytic.paoi_p(cfg, f, [g]).total
    grid = g.grid
    best_const = min(
        analytic.paoi_p(cfg, f, [PiecewiseFn(grid, np.full_like(grid, gam))]).total
        for gam in np.linspace(0.0, 8.0, 200)
    )
    assert val <= best_const + 1e-6


def test_beats_random_piecewise_candidates():
    # single source: the subproblem objective IS the full weighted total
    cfg = config_p(weights=(1.0,))
    f = FreqVector((1.0,))
    grid = default_t_grid(cfg.t_dist)
    g0 = _zeros(cfg)
    g1, _ = solve_g_m(cfg, f, g0, 0)
    val = analytic.paoi_p(cfg, f, [g1]).total
    rng = np.random.default_rng(17)
    for _ in range(100):
        cand = PiecewiseFn(grid, rng.uniform(0.0, 5.0, grid.size))
        got = analytic.paoi_p(cfg, f, [cand]).total
        assert val <= got + 1e-6


def test_subproblem_ratio_dominates_random_candidates():
    # multi-source: the solver minimizes its own fractional term (the
    # candidate's effect on the other sources' inter-generation term is the
    # alternating solver's concern, not this one's)
    cfg = config_p(weights=(0.4, 0.6))
    f = FreqVector((0.45, 0.55))
    grid = default_t_grid(cfg.t_dist)
    g0 = _zeros(cfg)
    g1, c1 = solve_g_m(cfg, f, g0, 0)

    def ratio(g_cand):
        ez = analytic.mean_Z_p(cfg, f, [g_cand, g0[1]])
        s = analytic.delivered_sojourn(cfg, g_cand)
        p = analytic.delivery_prob(cfg, g_cand)
        return cfg.weights[0] * (ez / f[0] + s) / p

    assert ratio(g1) == pytest.approx(c1, abs=1e-6)
    rng = np.random.default_rng(17)
    for _ in range(100):
        cand = PiecewiseFn(grid, rng.uniform(0.0, 5.0, grid.size))
        assert c1 <= ratio(cand) + 1e-6


def test_gamma_argmin_nonincreasing_in_t(preset_p):
    """Trend: the optimal g value does not grow with the transmission time."""
    f = FreqVector.uniform(5)
    g0 = _zeros(preset_p)
    _, c, _ = solve_g_m(preset_p, f, g0, 0, full_output=True)
    ts = default_t_grid(preset_p.t_dist)
    gams = [pointwise_argmin(preset_p, f, g0, 0, t, c) for t in ts]
    assert all(b <= a + 1e-6 for a, b in zip(gams, gams[1:]))

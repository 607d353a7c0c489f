"""Threshold subproblem: objective identities, decomposition, search oracles."""

import numpy as np
import pytest

import paoi.distributions as dists
from paoi import (
    FreqVector,
    ServerMode,
    SystemConfig,
    ThresholdVector,
    deterministic,
    expected_excess,
    exponential,
    gamma,
    lognormal,
    pareto,
)
from paoi.analytic import paoi_np
from paoi.threshold_opt import (
    optimize_all_thresholds,
    optimize_threshold,
    theta_search_cap,
    threshold_objective,
)

from conftest import config_np

EXP1 = exponential(1.0)


def _b_sum(config, f):
    return sum(w / fm for w, fm in zip(config.weights, f))


def test_objective_at_zero_substitution():
    cfg = config_np()
    f = FreqVector.uniform(5)
    excess0 = expected_excess(cfg.c_dist, cfg.t_dist, 0.0)
    for m in range(5):
        expect = cfg.weights[m] * excess0 + f[m] * excess0 * _b_sum(cfg, f)
        assert threshold_objective(cfg, f, m, 0.0) == pytest.approx(expect, rel=1e-12)


def test_objective_at_infinity_substitution():
    cfg = config_np()
    f = FreqVector.uniform(5)
    for m in (0, 4):
        expect = f[m] * cfg.mean_c * _b_sum(cfg, f)
        assert threshold_objective(cfg, f, m, 1e9) == pytest.approx(expect, rel=1e-5)


def test_objective_single_source_composition():
    cfg = SystemConfig((1.0,), EXP1, EXP1, ServerMode.NON_PREEMPTIVE)
    f = FreqVector((1.0,))
    wbar = expected_excess(EXP1, EXP1, 1.0)
    capped = dists.truncated_mean(EXP1, 1.0)
    assert threshold_objective(cfg, f, 0, 1.0) == pytest.approx(
        wbar + (wbar + capped), rel=1e-12
    )


def test_decomposition_identity_reconstructs_total():
    """Sum of subproblem terms + constants == the full weighted total, 1e-10."""
    rng = np.random.default_rng(3)
    cfg = config_np()
    for _ in range(5):
        f = FreqVector.normalized(rng.uniform(0.5, 2.0, 5))
        theta = ThresholdVector(tuple(rng.uniform(0.0, 3.0, 5)))
        b = _b_sum(cfg, f)
        pieces = sum(threshold_objective(cfg, f, m, theta[m]) for m in range(5))
        const = cfg.mean_t * b + cfg.mean_t + cfg.mean_c
        total = paoi_np(cfg, f, theta).total
        assert pieces + const == pytest.approx(total, abs=1e-10)


def _dense_grid_argmin(cfg, f, m, n=10_000):
    """Brute-force oracle with the same smallest-theta tie-break (1e-10)."""
    cap = theta_search_cap(cfg)
    xs = np.linspace(0.0, cap, n)
    vals = np.asarray([threshold_objective(cfg, f, m, x) for x in xs])
    vmin = float(vals.min())
    j = int(np.argmax(vals <= vmin + 1e-10))
    return float(xs[j]), float(vals[j]), cap / (n - 1)


def test_matches_dense_grid_single_source():
    cfg = SystemConfig((1.0,), EXP1, EXP1, ServerMode.NON_PREEMPTIVE)
    f = FreqVector((1.0,))
    th, val = optimize_threshold(cfg, f, 0)
    gx, gv, res = _dense_grid_argmin(cfg, f, 0, n=2000)
    assert val <= gv + 1e-9
    assert abs(th - gx) <= res


def test_deterministic_compute_kink():
    cfg = SystemConfig(
        (0.5, 0.5), exponential(4.0), deterministic(1.0), ServerMode.NON_PREEMPTIVE
    )
    f = FreqVector((0.5, 0.5))
    th, val = optimize_threshold(cfg, f, 0)
    gx, gv, res = _dense_grid_argmin(cfg, f, 0, n=2000)
    assert val <= gv + 1e-9
    # boundary or the kink at theta = C
    assert th == pytest.approx(0.0, abs=res) or th == pytest.approx(1.0, abs=res) or abs(th - gx) <= res


def test_never_worse_than_endpoints():
    for mean_t in (0.1, 0.4, 1.0):
        cfg = config_np(mean_t=mean_t)
        f = FreqVector.uniform(5)
        for m in (0, 4):
            th, val = optimize_threshold(cfg, f, m)
            assert val <= threshold_objective(cfg, f, m, 0.0) + 1e-12
            assert val <= threshold_objective(cfg, f, m, theta_search_cap(cfg)) + 1e-12


def test_beats_random_thresholds():
    cfg = config_np(mean_t=0.15)
    f = FreqVector.uniform(5)
    rng = np.random.default_rng(9)
    cap = theta_search_cap(cfg)
    for m in (1, 3):
        th, val = optimize_threshold(cfg, f, m)
        randoms = rng.uniform(0.0, cap, 50)
        assert all(val <= threshold_objective(cfg, f, m, x) + 1e-10 for x in randoms)


def test_equal_weights_uniform_f_equal_thresholds():
    cfg = config_np(weights=(0.2,) * 5)
    th = optimize_all_thresholds(cfg, FreqVector.uniform(5))
    assert len(set(th)) == 1


def test_threshold_ordering_follows_weights():
    cfg = config_np(mean_t=0.1)
    from paoi import optimal_f_np

    f = optimal_f_np(cfg, ThresholdVector.zeros(5))
    th = optimize_all_thresholds(cfg, f).as_array()
    assert np.all(np.diff(th) >= -1e-9)


@pytest.mark.parametrize(
    "c_dist,t_dist",
    [
        (gamma(2, 0.5), exponential(5.0)),
        (lognormal(-0.5, 1.0), pareto(2.5, 0.12)),
    ],
)
def test_matches_dense_grid_other_families(c_dist, t_dist):
    cfg = SystemConfig((0.4, 0.6), t_dist, c_dist, ServerMode.NON_PREEMPTIVE)
    f = FreqVector((0.5, 0.5))
    th, val = optimize_threshold(cfg, f, 1)
    gx, gv, res = _dense_grid_argmin(cfg, f, 1, n=2000)
    assert val <= gv + 1e-9
    assert abs(th - gx) <= res

"""Shared fixtures and independent oracles for the test suite.

The oracles here are deliberately separate from the library's evaluation
paths: Monte Carlo estimators drawn straight from numpy generators, a dense
projected-gradient minimizer over the frequency simplex, and brute-force
grid scans.  Tests compare the closed forms and optimizers against these.
"""

from __future__ import annotations

import numpy as np
import pytest

from paoi import (
    DistributionSpec,
    FreqVector,
    ServerMode,
    SystemConfig,
    exponential,
    gamma,
    sample,
)
from paoi.distributions import RngStream

WEIGHTS_5 = tuple(k / 15.0 for k in range(1, 6))


def config_np(mean_t: float = 0.2, mean_c: float = 1.0, weights=WEIGHTS_5) -> SystemConfig:
    """The workhorse preset: exponential T, gamma(2) C with E[C]=mean_c."""
    return SystemConfig(
        weights, exponential(1.0 / mean_t), gamma(2.0, mean_c / 2.0), ServerMode.NON_PREEMPTIVE
    )


def config_p(mean_t: float = 0.2, mean_c: float = 1.0, weights=WEIGHTS_5) -> SystemConfig:
    return SystemConfig(
        weights, exponential(1.0 / mean_t), gamma(2.0, mean_c / 2.0), ServerMode.PREEMPTIVE
    )


def mc_mean(values: np.ndarray):
    """(mean, stderr) of a Monte Carlo sample."""
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def draw(dist: DistributionSpec, n: int, seed: int) -> np.ndarray:
    return np.asarray(sample(dist, RngStream(seed), n), dtype=float)


# ---------------------------------------------------------------------------
# Projected-gradient oracle on the frequency simplex


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def projected_gradient_simplex(obj, grad, x0, max_iters=20000, tol=1e-12):
    """Minimize obj over the simplex with Armijo backtracking.

    Rejects iterates touching the boundary (the objectives here blow up at
    f_m = 0), so the search stays interior like the analytic solution.
    """
    x = np.asarray(x0, dtype=float)
    fx = obj(x)
    step = 1.0
    for _ in range(max_iters):
        g = grad(x)
        improved = False
        s = step
        for _ in range(60):
            cand = simplex_project(x - s * g)
            if cand.min() > 1e-12:
                f_cand = obj(cand)
                if f_cand < fx - 1e-16:
                    x_new = cand
                    improved = True
                    break
            s *= 0.5
        if not improved:
            break
        moved = float(np.max(np.abs(x_new - x)))
        x, fx = x_new, obj(x_new)
        step = min(s * 2.0, 1.0)
        if moved < tol:
            break
    return x


def np_objective_and_grad(config, theta):
    """Non-preemptive weighted total as a function of f, with gradient."""
    from paoi import analytic
    import paoi.distributions as dists

    w = np.asarray(config.weights)
    e_t, e_c = config.mean_t, config.mean_c
    zbar = np.asarray(
        [
            e_t
            + analytic.mean_wait_np(config, th)
            + dists.truncated_mean(config.c_dist, th)
            for th in theta
        ]
    )
    wait = np.asarray([analytic.mean_wait_np(config, th) for th in theta])
    const = float(np.dot(w, wait)) + e_t + e_c

    def obj(f):
        return float(np.dot(f, zbar) * np.sum(w / f) + const)

    def grad(f):
        return zbar * np.sum(w / f) - (w / f**2) * np.dot(f, zbar)

    return obj, grad


def p_objective_and_grad(config, g):
    """Preemptive total as a function of f, with gradient."""
    from paoi import analytic

    w = np.asarray(config.weights)
    e_t = config.mean_t
    cap = np.asarray([analytic.capped_compute_p(config, gm) for gm in g])
    p = np.asarray([analytic.delivery_prob(config, gm) for gm in g])
    soj = np.asarray([analytic.delivered_sojourn(config, gm) for gm in g])
    const = float(np.sum(w * soj / p))

    def obj(f):
        e_z = e_t + float(np.dot(f, cap))
        return float(e_z * np.sum(w / (p * f)) + const)

    def grad(f):
        e_z = e_t + float(np.dot(f, cap))
        b = np.sum(w / (p * f))
        return cap * b - (w / (p * f**2)) * e_z

    return obj, grad


@pytest.fixture(scope="session")
def preset_np():
    return config_np()


@pytest.fixture(scope="session")
def preset_p():
    return config_p()

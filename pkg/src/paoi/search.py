"""Shared 1-D minimization: coarse grid scan plus golden-section refinement.

The objectives this serves (threshold subproblems, pointwise sampler
minimizations) can be non-convex with several local minima, so a dense scan
brackets the global minimum and a derivative-free refinement polishes it.
Ties within a small tolerance resolve to the smallest argument, which keeps
optimizers deterministic and makes boundary degeneration (a zero threshold)
come out exactly zero.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["golden_section", "minimize_on_grid"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fn, lo: float, hi: float, tol: float = 1e-8):
    """Minimize fn on [lo, hi]; returns (x, fn(x)) at bracket width <= tol."""
    a, b = float(lo), float(hi)
    if b - a <= tol:
        x = 0.5 * (a + b)
        return x, fn(x)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def minimize_on_grid(
    fn,
    lo: float,
    hi: float,
    n_grid: int = 256,
    refine_tol: float = 1e-8,
    tie_tol: float = 1e-10,
    grid_values=None,
):
    """Global-ish scalar minimization on [lo, hi].

    Scans ``n_grid`` evenly spaced points, refines around the best bracket by
    golden section, and returns the smallest x whose value is within
    ``tie_tol`` of the best seen.  ``grid_values`` may carry precomputed
    (xs, fs) for the scan phase, in which case ``fn`` is only used for
    refinement.
    """
    if hi < lo:
        raise ValueError("hi must be >= lo")
    if grid_values is not None:
        xs, fs = grid_values
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
    else:
        xs = np.linspace(lo, hi, n_grid)
        fs = np.asarray([fn(x) for x in xs], dtype=float)
    best = int(np.argmin(fs))
    cand_x = [float(xs[best])]
    cand_f = [float(fs[best])]
    if xs.size > 1:
        a = float(xs[max(best - 1, 0)])
        b = float(xs[min(best + 1, xs.size - 1)])
        if b > a:
            xr, fr = golden_section(fn, a, b, tol=refine_tol)
            cand_x.append(float(xr))
            cand_f.append(float(fr))
    # boundary always considered (degeneration to lo must come out exact)
    cand_x.append(float(xs[0]))
    cand_f.append(float(fs[0]))
    all_x = np.concatenate([xs, cand_x])
    all_f = np.concatenate([fs, cand_f])
    vmin = float(all_f.min())
    near = all_f <= vmin + tie_tol
    i = int(np.argmin(np.where(near, all_x, np.inf)))
    return float(all_x[i]), float(all_f[i])

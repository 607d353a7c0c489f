"""Core system types: configuration, frequency/threshold vectors, samplers' g functions."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np

from .distributions import DistributionSpec, mean, parse_distribution
from .errors import ConfigError

__all__ = [
    "ServerMode",
    "SystemConfig",
    "FreqVector",
    "ThresholdVector",
    "PiecewiseFn",
]

_WEIGHT_SUM_TOL = 1e-12
_FREQ_SUM_TOL = 1e-10


class ServerMode(enum.Enum):
    """Edge-server queueing discipline."""

    NON_PREEMPTIVE = "non_preemptive"
    PREEMPTIVE = "preemptive"

    @classmethod
    def parse(cls, text: str) -> "ServerMode":
        for m in cls:
            if m.value == text:
                return m
        raise ConfigError(f"unknown server mode {text!r}")


@dataclass(frozen=True)
class SystemConfig:
    """Source weights plus transmission/computation time distributions.

    Weights must be positive and sum to one (the per-source demand shares);
    the number of sources is implied by the weight vector.
    """

    weights: tuple[float, ...]
    t_dist: DistributionSpec
    c_dist: DistributionSpec
    mode: ServerMode

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) < 1:
            raise ConfigError("at least one source is required")
        if any(w <= 0 for w in self.weights):
            raise ConfigError("weights must be strictly positive")
        if abs(sum(self.weights) - 1.0) > _WEIGHT_SUM_TOL:
            raise ConfigError(
                f"weights must sum to 1 within {_WEIGHT_SUM_TOL:g}; got {sum(self.weights)!r}"
            )
        if not isinstance(self.mode, ServerMode):
            raise ConfigError("mode must be a ServerMode")

    @property
    def n_sources(self) -> int:
        return len(self.weights)

    @property
    def mean_t(self) -> float:
        return mean(self.t_dist)

    @property
    def mean_c(self) -> float:
        return mean(self.c_dist)

    def with_dists(self, t_dist=None, c_dist=None) -> "SystemConfig":
        return SystemConfig(
            self.weights, t_dist or self.t_dist, c_dist or self.c_dist, self.mode
        )

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        try:
            weights = tuple(d["weights"])
            t_dist = parse_distribution(d["t_dist"])
            c_dist = parse_distribution(d["c_dist"])
            mode = ServerMode.parse(d["mode"])
        except KeyError as e:
            raise ConfigError(f"system config missing field {e.args[0]!r}") from None
        return cls(weights, t_dist, c_dist, mode)

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "t_dist": self.t_dist.canonical(),
            "c_dist": self.c_dist.canonical(),
            "mode": self.mode.value,
        }


@dataclass(frozen=True)
class FreqVector:
    """Scheduling frequencies: positive, summing to one.

    Interior entries are required for more than one source; the degenerate
    single-source vector is exactly (1,).
    """

    f: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(float(x) for x in self.f))
        n = len(self.f)
        if n < 1:
            raise ConfigError("frequency vector cannot be empty")
        if abs(sum(self.f) - 1.0) > _FREQ_SUM_TOL:
            raise ConfigError(
                f"frequencies must sum to 1 within {_FREQ_SUM_TOL:g}; got {sum(self.f)!r}"
            )
        if n == 1:
            if abs(self.f[0] - 1.0) > _FREQ_SUM_TOL:
                raise ConfigError("single-source frequency must be 1")
        elif any(x <= 0.0 or x >= 1.0 for x in self.f):
            raise ConfigError("frequencies must lie strictly inside (0, 1)")

    def __len__(self) -> int:
        return len(self.f)

    def __getitem__(self, i: int) -> float:
        return self.f[i]

    def __iter__(self):
        return iter(self.f)

    @classmethod
    def uniform(cls, n: int) -> "FreqVector":
        return cls((1.0 / n,) * n)

    @classmethod
    def normalized(cls, raw) -> "FreqVector":
        arr = np.asarray(raw, dtype=float)
        if np.any(arr <= 0):
            raise ConfigError("frequencies must be positive before normalization")
        return cls(tuple(arr / arr.sum()))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.f, dtype=float)


@dataclass(frozen=True)
class ThresholdVector:
    """Per-source sampling thresholds; zero means a zero-wait source."""

    theta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        if len(self.theta) < 1:
            raise ConfigError("threshold vector cannot be empty")
        if any(x < 0 for x in self.theta):
            raise ConfigError("thresholds must be >= 0")

    def __len__(self) -> int:
        return len(self.theta)

    def __getitem__(self, i: int) -> float:
        return self.theta[i]

    def __iter__(self):
        return iter(self.theta)

    @classmethod
    def zeros(cls, n: int) -> "ThresholdVector":
        return cls((0.0,) * n)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)


class PiecewiseFn:
    """Nonnegative piecewise-linear function on a strictly increasing grid.

    Evaluation interpolates linearly between knots and extends the boundary
    values as constants beyond the first/last knot, so g(t) is defined and
    deterministic for every t > 0.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ConfigError("grid must be a nonempty 1-D array")
        if v.shape != g.shape:
            raise ConfigError("grid and values must have matching shapes")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ConfigError("grid must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ConfigError("values must be finite and >= 0")
        self.grid = g
        self.values = v

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)

    def __eq__(self, other):
        return (
            isinstance(other, PiecewiseFn)
            and np.array_equal(self.grid, other.grid)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"PiecewiseFn({self.grid.size} knots on [{self.grid[0]:g}, {self.grid[-1]:g}])"

    @classmethod
    def constant(cls, value: float, grid=(1.0,)) -> "PiecewiseFn":
        g = np.asarray(grid, dtype=float)
        return cls(g, np.full(g.shape, float(value)))

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    def to_knots_csv(self) -> str:
        """Two-column knot table ``t,g`` (one row per knot)."""
        buf = io.StringIO()
        buf.write("t,g\n")
        for t, v in zip(self.grid, self.values):
            buf.write(f"{float(t)!r},{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_knots_csv(cls, text: str) -> "PiecewiseFn":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "t,g":
            raise ConfigError("knot table must start with header 't,g'")
        ts, vs = [], []
        for ln in lines[1:]:
            t_str, _, v_str = ln.partition(",")
            ts.append(float(t_str))
            vs.append(float(v_str))
        return cls(ts, vs)

    def to_jsonable(self) -> dict:
        return {"grid": self.grid.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_jsonable(cls, d: dict) -> "PiecewiseFn":
        return cls(d["grid"], d["values"])

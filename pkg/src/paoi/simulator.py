"""Event-driven simulation of the multi-source edge-computing pipeline.

Timeline semantics (packet i, generation time s_i, transmission T_i,
computation C_i):

* Non-preemptive: packet i reaches the server at s_i + T_i, waits until the
  previous computation finishes, is served, and is always delivered.  The
  next packet's source is selected when packet i starts service, and the
  next generation happens min{C_i, theta_next} after that instant.
* Preemptive: packet i starts service on arrival; the next generation
  happens min{C_i, g_{m_i}(T_i)} after that.  If the next packet arrives
  while i is still in service, i is dropped.

Packet 0 is the initial condition: generated at -(T_0 + C_0) so that every
source starts with age T_0 + C_0 at time zero; it contributes no peak
statistics.  A peak is recorded at each delivery as the destination age just
before it, and independently as (inter-generation gap since the previous
delivered packet of the source) + (sojourn); the two must agree.

Runs with a scheduler whose choices do not depend on the system state
(random, weighted round-robin) are fully vectorized; the max-age-first
scheduler requires the sequential loop.  Transmission times, computation
times, and scheduler randomness come from separate child streams of the run
seed, so the event timeline is reproducible and two samplers that make
identical decisions (e.g. zero-wait vs. an all-zero threshold vector)
produce bit-identical results under a shared seed.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import distributions as dists
from .errors import ConfigError, IncompatiblePolicyError, InsufficientDeliveriesError
from .system import FreqVector, PiecewiseFn, ServerMode, SystemConfig, ThresholdVector

__all__ = [
    "RandomScheduler",
    "WeightedRoundRobin",
    "MaxAgeFirst",
    "ZeroWaitSampler",
    "FixedThresholdSampler",
    "TransmissionAwareSampler",
    "SourceSimStats",
    "SimResult",
    "run",
    "realized_stats",
]

_MIN_DELIVERIES = 100
_TIME_ATOL = 1e-7


# ---------------------------------------------------------------------------
# Policies


@dataclass(frozen=True)
class RandomScheduler:
    """Draws each packet's source i.i.d. from a fixed frequency vector."""

    frequencies: FreqVector

    name = "random"


@dataclass(frozen=True)
class WeightedRoundRobin:
    """Cycles through a fixed source sequence realizing target frequencies."""

    sequence: tuple[int, ...]

    name = "wrr"

    def __post_init__(self):
        if len(self.sequence) == 0:
            raise ConfigError("round-robin sequence cannot be empty")
        if any(s < 0 for s in self.sequence):
            raise ConfigError("round-robin sequence entries must be source indices")

    @classmethod
    def from_frequencies(cls, f, max_cycle: int = 10_000) -> "WeightedRoundRobin":
        """Build the smallest exact cycle, or a largest-remainder rounding.

        The cycle length is the least common denominator of the frequencies
        (as rationals within 1/max_cycle); if that exceeds max_cycle the
        counts are apportioned by largest remainder at length max_cycle.
        The sequence lists each source's slots as one contiguous block per
        cycle, lowest source index first.
        """
        fr = [Fraction(x).limit_denominator(max_cycle) for x in f]
        k = 1
        for x in fr:
            k = k * x.denominator // math.gcd(k, x.denominator)
        if k > max_cycle:
            k = max_cycle
        raw = [float(x) * k for x in f]
        counts = [int(math.floor(r)) for r in raw]
        remainders = sorted(
            range(len(f)), key=lambda i: (-(raw[i] - counts[i]), i)
        )
        for i in remainders[: k - sum(counts)]:
            counts[i] += 1
        seq = []
        for m, c in enumerate(counts):
            seq.extend([m] * c)
        return cls(tuple(seq))


@dataclass(frozen=True)
class MaxAgeFirst:
    """Always schedules the source with the largest destination age."""

    name = "maf"


@dataclass(frozen=True)
class ZeroWaitSampler:
    """Generates the next packet the instant the pipeline can accept it."""

    name = "zero_wait"


@dataclass(frozen=True)
class FixedThresholdSampler:
    """Next generation min{C_i, theta of the next packet's source} after
    the current packet starts service (non-preemptive only)."""

    thresholds: ThresholdVector

    name = "threshold"


@dataclass(frozen=True)
class TransmissionAwareSampler:
    """Next generation min{C_i, g of the current source at T_i} after the
    current packet starts service (preemptive only)."""

    functions: tuple[PiecewiseFn, ...]

    name = "transmission_aware"

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class SourceSimStats:
    weight: float
    mean_peak: float
    peak_stderr: float
    n_generated: int
    n_delivered: int
    n_dropped: int
    realized_freq: float
    realized_mean_wait: float
    realized_delivery_frac: float


@dataclass(frozen=True)
class SimResult:
    weighted_paoi: float
    weighted_paoi_stderr: float
    per_source: tuple[SourceSimStats, ...]
    realized_ez: float
    n_packets: int
    warmup_fraction: float
    seed: int | None
    scheduler: str
    sampler: str
    mode: str

    CSV_HEADER = (
        "config_hash,seed,scheduler,sampler,n_packets,weighted_paoi,"
        "weighted_paoi_stderr,per_source_mean_peaks"
    )

    def to_csv_row(self, config) -> str:
        """One run as one CSV row, keyed by a stable hash of the config."""
        digest = hashlib.sha256(
            json.dumps(config.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:12]
        peaks = ";".join(repr(s.mean_peak) for s in self.per_source)
        return (
            f"{digest},{self.seed},{self.scheduler},{self.sampler},{self.n_packets},"
            f"{self.weighted_paoi!r},{self.weighted_paoi_stderr!r},{peaks}"
        )


def _batch_stderr(x: np.ndarray) -> float:
    n = x.size
    if n < 2:
        return 0.0
    n_batches = 32
    if n >= 2 * n_batches:
        usable = (n // n_batches) * n_batches
        means = x[:usable].reshape(n_batches, -1).mean(axis=1)
        return float(means.std(ddof=1) / math.sqrt(n_batches))
    return float(x.std(ddof=1) / math.sqrt(n))


# ---------------------------------------------------------------------------
# Scheduling sequences for state-free schedulers


def _source_sequence(scheduler, config: SystemConfig, n: int, rng: dists.RngStream):
    """Sources m_0..m_n for schedulers that ignore system state, else None."""
    m_count = config.n_sources
    if isinstance(scheduler, RandomScheduler):
        f = scheduler.frequencies
        if len(f) != m_count:
            raise ConfigError("scheduler frequency length does not match source count")
        cum = np.cumsum(f.as_array())
        u = rng.generator.random(n + 1)
        return np.minimum(np.searchsorted(cum, u, side="right"), m_count - 1).astype(np.int64)
    if isinstance(scheduler, WeightedRoundRobin):
        seq = np.asarray(scheduler.sequence, dtype=np.int64)
        if seq.max() >= m_count:
            raise ConfigError("round-robin sequence references an unknown source")
        reps = int(np.ceil((n + 1) / seq.size))
        return np.tile(seq, reps)[: n + 1]
    if isinstance(scheduler, MaxAgeFirst):
        return None
    raise ConfigError(f"unknown scheduler {scheduler!r}")


def _theta_array(sampler, config: SystemConfig) -> np.ndarray:
    if isinstance(sampler, ZeroWaitSampler):
        return np.zeros(config.n_sources)
    th = sampler.thresholds
    if len(th) != config.n_sources:
        raise ConfigError("threshold vector length does not match source count")
    return th.as_array()


def _g_list(sampler, config: SystemConfig):
    if isinstance(sampler, ZeroWaitSampler):
        zero = PiecewiseFn((1.0,), (0.0,))
        return [zero] * config.n_sources
    g = sampler.functions
    if len(g) != config.n_sources:
        raise ConfigError("sampling function list length does not match source count")
    return list(g)


def _check_policy(config: SystemConfig, scheduler, sampler):
    np_mode = config.mode is ServerMode.NON_PREEMPTIVE
    if isinstance(sampler, FixedThresholdSampler) and not np_mode:
        raise IncompatiblePolicyError("threshold sampler requires the non-preemptive mode")
    if isinstance(sampler, TransmissionAwareSampler) and np_mode:
        raise IncompatiblePolicyError("transmission-aware sampler requires the preemptive mode")
    if not isinstance(sampler, (ZeroWaitSampler, FixedThresholdSampler, TransmissionAwareSampler)):
        raise ConfigError(f"unknown sampler {sampler!r}")


# ---------------------------------------------------------------------------
# Event loops


def _run_np(config, scheduler, sampler, n, T, C, m_seq):
    """Non-preemptive timeline; returns (s, b, r, W, m, delivered)."""
    theta = _theta_array(sampler, config)
    m_count = config.n_sources
    if m_seq is not None:
        m = m_seq
        theta_next = theta[m[1:]]  # theta of packet i+1's source, i = 0..n-1
        big_theta = np.minimum(C[:n], theta_next)
        b = np.empty(n + 1)
        b[0] = -C[0]
        np.cumsum(np.maximum(big_theta + T[1 : n + 1], C[:n]), out=b[1:])
        b[1:] += b[0]
        s = np.empty(n + 1)
        s[0] = -T[0] - C[0]
        s[1:] = b[:n] + big_theta
    else:
        m = np.empty(n + 1, dtype=np.int64)
        s = np.empty(n + 1)
        b = np.empty(n + 1)
        last_gen = np.empty(m_count)
        s[0] = -T[0] - C[0]
        b[0] = -C[0]
        last_gen[:] = s[0]
        m[0] = 0
        for i in range(n):
            if i >= 1:
                last_gen[m[i - 1]] = s[i - 1]  # packet i-1 delivered by b_i
            m_next = int(np.argmax(b[i] - last_gen))
            m[i + 1] = m_next
            th = min(C[i], theta[m_next])
            s[i + 1] = b[i] + th
            b[i + 1] = max(s[i + 1] + T[i + 1], b[i] + C[i])
    a = s + T[: n + 1]
    w = b - a
    r = b + C[: n + 1]
    delivered = np.ones(n + 1, dtype=bool)
    # unit queue: the next packet never arrives before the current one starts service
    assert np.all(a[1:] >= b[:-1] - _TIME_ATOL), "unit server queue overflowed"
    return s, r, w, m, delivered


def _eval_g(g_list, m, T, upto):
    out = np.empty(upto)
    for src, g in enumerate(g_list):
        mask = m[:upto] == src
        if np.any(mask):
            out[mask] = g(T[:upto][mask])
    return out


def _run_p(config, scheduler, sampler, n, T, C, m_seq):
    """Preemptive timeline; returns (s, r, W, m, delivered)."""
    g_list = _g_list(sampler, config)
    m_count = config.n_sources
    if m_seq is not None:
        m = m_seq
        big_theta = np.minimum(C[: n + 1], _eval_g(g_list, m, T, n + 1))
        s = np.empty(n + 1)
        s[0] = -T[0] - C[0]
        np.cumsum(T[:n] + big_theta[:n], out=s[1:])
        s[1:] += s[0]
        delivered = C[: n + 1] <= big_theta + T[1 : n + 2]
    else:
        m = np.empty(n + 1, dtype=np.int64)
        s = np.empty(n + 1)
        big_theta = np.empty(n + 1)
        delivered = np.zeros(n + 1, dtype=bool)
        resolved = np.zeros(n + 1, dtype=bool)
        last_gen = np.empty(m_count)
        s[0] = -T[0] - C[0]
        last_gen[:] = s[0]
        m[0] = 0
        for i in range(n + 1):
            big_theta[i] = min(C[i], float(g_list[m[i]](T[i])))
            nxt = s[i] + T[i] + big_theta[i]
            if i >= 1 and not resolved[i - 1]:
                resolved[i - 1] = True
                if C[i - 1] <= big_theta[i - 1] + T[i]:
                    delivered[i - 1] = True
                    last_gen[m[i - 1]] = s[i - 1]
            if C[i] <= big_theta[i]:  # finished before the next generation
                resolved[i] = True
                delivered[i] = True
                last_gen[m[i]] = s[i]
            if i < n:
                s[i + 1] = nxt
                m[i + 1] = int(np.argmax(nxt - last_gen))
        if not resolved[n]:
            delivered[n] = C[n] <= big_theta[n] + T[n + 1]
    a = s + T[: n + 1]
    r = np.where(delivered, a + C[: n + 1], np.inf)
    w = np.zeros(n + 1)
    return s, r, w, m, delivered


# ---------------------------------------------------------------------------
# Statistics


def _collect(config, s, r, w, m, delivered, T, C, n, warmup_fraction, seed, scheduler, sampler):
    m_count = config.n_sources
    idx_all = np.arange(n + 1)
    z = np.diff(s)  # Z_i, i = 0..n-1
    # continuous-working check per event
    assert np.all(
        z <= T[:n] + w[:n] + C[:n] + _TIME_ATOL
    ), "sampler violated the continuous-working bound"
    per_source = []
    total = 0.0
    var_total = 0.0
    for src in range(m_count):
        mine = (m == src) & (idx_all >= 1)
        gen_idx = np.where(mine)[0]
        del_idx = np.where(mine & delivered)[0]
        n_gen = gen_idx.size
        n_del = del_idx.size
        if n_del < _MIN_DELIVERIES:
            raise InsufficientDeliveriesError(
                f"source {src} delivered {n_del} packets (< {_MIN_DELIVERIES}); "
                "increase n_packets"
            )
        gen = s[del_idx]
        rec = r[del_idx]
        prev = np.empty(n_del)
        prev[0] = s[0]
        prev[1:] = gen[:-1]
        peaks = rec - prev  # destination age just before each delivery
        dual = (gen - prev) + (rec - gen)  # inter-generation gap + sojourn
        assert np.allclose(peaks, dual, rtol=0.0, atol=_TIME_ATOL), "peak bookkeeping mismatch"
        warm = math.ceil(warmup_fraction * n_del)
        used = peaks[warm:] if warm < n_del else peaks
        mean_peak = float(used.mean())
        se = _batch_stderr(used)
        weight = config.weights[src]
        total += weight * mean_peak
        var_total += (weight * se) ** 2
        per_source.append(
            SourceSimStats(
                weight=weight,
                mean_peak=mean_peak,
                peak_stderr=se,
                n_generated=int(n_gen),
                n_delivered=int(n_del),
                n_dropped=int(n_gen - n_del),
                realized_freq=float(n_gen / n),
                realized_mean_wait=float(w[gen_idx].mean()),
                realized_delivery_frac=float(n_del / n_gen),
            )
        )
    return SimResult(
        weighted_paoi=total,
        weighted_paoi_stderr=float(math.sqrt(var_total)),
        per_source=tuple(per_source),
        realized_ez=float(z[1:].mean()) if n >= 2 else float(z.mean()),
        n_packets=n,
        warmup_fraction=warmup_fraction,
        seed=seed,
        scheduler=scheduler.name,
        sampler=sampler.name,
        mode=config.mode.value,
    )


def run(
    config: SystemConfig,
    scheduler,
    sampler,
    n_packets: int,
    seed,
    warmup_fraction: float = 0.01,
) -> SimResult:
    """Simulate n_packets generated packets and return empirical peak stats.

    ``seed`` is an integer or an RngStream; identical inputs give identical
    results.  The first warmup_fraction of each source's peaks is discarded.
    """
    if n_packets < 1:
        raise ConfigError("n_packets must be >= 1")
    if not 0.0 <= warmup_fraction < 1.0:
        raise ConfigError("warmup_fraction must lie in [0, 1)")
    _check_policy(config, scheduler, sampler)
    if isinstance(seed, dists.RngStream):
        root = seed
        seed_repr = root.seed
    else:
        root = dists.RngStream(int(seed))
        seed_repr = int(seed)
    n = int(n_packets)
    t_len = n + 2
    T = np.asarray(dists.sample(config.t_dist, root.child("T"), t_len), dtype=float)
    C = np.asarray(dists.sample(config.c_dist, root.child("C"), n + 1), dtype=float)
    m_seq = _source_sequence(scheduler, config, n, root.child("sched"))
    if config.mode is ServerMode.NON_PREEMPTIVE:
        s, r, w, m, delivered = _run_np(config, scheduler, sampler, n, T, C, m_seq)
    else:
        s, r, w, m, delivered = _run_p(config, scheduler, sampler, n, T, C, m_seq)
    return _collect(
        config, s, r, w, m, delivered, T, C, n, warmup_fraction, seed_repr, scheduler, sampler
    )


def realized_stats(result: SimResult) -> list[dict]:
    """Per-source diagnostics for cross-checking the closed forms."""
    return [
        {
            "source": i,
            "realized_freq": st.realized_freq,
            "realized_mean_wait": st.realized_mean_wait,
            "realized_delivery_frac": st.realized_delivery_frac,
            "mean_peak": st.mean_peak,
            "n_delivered": st.n_delivered,
            "n_dropped": st.n_dropped,
        }
        for i, st in enumerate(result.per_source)
    ]

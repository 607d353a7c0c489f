"""Experiment runner: config loading, sweeps, policy resolution, CSV output.

An experiment is one JSON document: a base system, a sweep axis (mean
transmission or computation time), a list of scheduler x sampler policies,
packet count, and seeds.  For each sweep point the harness optimizes the
proposed policy once (shared by every benchmark that uses the optimized
sampler), evaluates the closed forms where they apply (random scheduler
rows), simulates every (policy, seed) pair, and writes one CSV with the
fixed column order

    experiment, sweep_param, sweep_value, scheduler, sampler, seed,
    paoi_analytic, paoi_sim, paoi_sim_stderr, params_json

Rows are sorted by (sweep_value, scheduler, sampler, seed) so re-running a
spec reproduces the file byte for byte apart from the leading timestamp
comment line.  Simulator failures are recorded in the row's params_json and
do not abort the sweep.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from . import alternating, analytic, dinkelbach, freq_opt
from .errors import ConfigError, PaoiError
from .simulator import (
    FixedThresholdSampler,
    MaxAgeFirst,
    RandomScheduler,
    TransmissionAwareSampler,
    WeightedRoundRobin,
    ZeroWaitSampler,
    run,
)
from .system import FreqVector, PiecewiseFn, ServerMode, SystemConfig, ThresholdVector

__all__ = [
    "PolicySpec",
    "ExperimentSpec",
    "validate_config",
    "run_experiment",
    "load_preset",
    "preset_names",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "experiment",
    "sweep_param",
    "sweep_value",
    "scheduler",
    "sampler",
    "seed",
    "paoi_analytic",
    "paoi_sim",
    "paoi_sim_stderr",
    "params_json",
)

_SCHEDULERS = ("random", "wrr", "maf")
_SWEEP_PARAMS = ("mean_t", "mean_c")
OUTPUT_DIR_ENV = "PAOI_OUT"


@dataclass(frozen=True)
class PolicySpec:
    scheduler: str
    sampler: str  # "optimized" | "zero_wait" | "threshold"
    thresholds: tuple[float, ...] | None = None

    def label(self) -> tuple[str, str]:
        return self.scheduler, self.sampler

    @classmethod
    def from_dict(cls, d: dict, where: str) -> "PolicySpec":
        if not isinstance(d, dict):
            raise ConfigError(f"{where}: policy must be an object")
        sched = d.get("scheduler")
        if sched not in _SCHEDULERS:
            raise ConfigError(f"{where}.scheduler: expected one of {_SCHEDULERS}, got {sched!r}")
        samp = d.get("sampler")
        if samp in ("optimized", "zero_wait"):
            return cls(sched, samp)
        if isinstance(samp, dict) and samp.get("kind") == "threshold":
            vals = samp.get("thresholds")
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"{where}.sampler.thresholds: expected a nonempty list")
            return cls(sched, "threshold", tuple(float(v) for v in vals))
        raise ConfigError(
            f"{where}.sampler: expected 'optimized', 'zero_wait', or "
            f"{{'kind': 'threshold', 'thresholds': [...]}}, got {samp!r}"
        )

    def to_dict(self) -> dict:
        if self.sampler == "threshold":
            return {
                "scheduler": self.scheduler,
                "sampler": {"kind": "threshold", "thresholds": list(self.thresholds)},
            }
        return {"scheduler": self.scheduler, "sampler": self.sampler}


@dataclass
class ExperimentSpec:
    name: str
    system: SystemConfig
    sweep_param: str
    sweep_values: tuple[float, ...]
    policies: tuple[PolicySpec, ...]
    n_packets: int
    seeds: tuple[int, ...]
    warmup_fraction: float = 0.01
    output: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "system": self.system.to_dict(),
            "sweep": {"param": self.sweep_param, "values": list(self.sweep_values)},
            "policies": [p.to_dict() for p in self.policies],
            "n_packets": self.n_packets,
            "seeds": list(self.seeds),
            "warmup_fraction": self.warmup_fraction,
            **({"output": self.output} if self.output else {}),
        }


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return d[key]


def spec_from_dict(doc: dict) -> ExperimentSpec:
    if not isinstance(doc, dict):
        raise ConfigError("experiment spec must be a JSON object")
    name = _require(doc, "name", "spec")
    sys_doc = _require(doc, "system", "spec")
    try:
        system = SystemConfig.from_dict(sys_doc)
    except ConfigError as e:
        raise ConfigError(f"spec.system: {e}") from None
    sweep = _require(doc, "sweep", "spec")
    param = _require(sweep, "param", "spec.sweep")
    if param not in _SWEEP_PARAMS:
        raise ConfigError(f"spec.sweep.param: expected one of {_SWEEP_PARAMS}, got {param!r}")
    values = _require(sweep, "values", "spec.sweep")
    if not isinstance(values, list) or not values:
        raise ConfigError("spec.sweep.values: expected a nonempty list")
    if any(float(v) <= 0 for v in values):
        raise ConfigError("spec.sweep.values: all grid values must be positive")
    policies_doc = _require(doc, "policies", "spec")
    if not isinstance(policies_doc, list) or not policies_doc:
        raise ConfigError("spec.policies: at least one policy is required")
    policies = tuple(
        PolicySpec.from_dict(p, f"spec.policies[{i}]") for i, p in enumerate(policies_doc)
    )
    n_packets = int(_require(doc, "n_packets", "spec"))
    if n_packets < 1:
        raise ConfigError("spec.n_packets: must be >= 1")
    seeds = _require(doc, "seeds", "spec")
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("spec.seeds: expected a nonempty list of integers")
    warmup = float(doc.get("warmup_fraction", 0.01))
    if not 0.0 <= warmup < 1.0:
        raise ConfigError("spec.warmup_fraction: must lie in [0, 1)")
    return ExperimentSpec(
        name=str(name),
        system=system,
        sweep_param=param,
        sweep_values=tuple(float(v) for v in values),
        policies=policies,
        n_packets=n_packets,
        seeds=tuple(int(s) for s in seeds),
        warmup_fraction=warmup,
        output=doc.get("output"),
    )


def validate_config(path) -> ExperimentSpec:
    """Load and validate an experiment spec; diagnostics name the field."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"spec file not found: {p}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return spec_from_dict(doc)


# ---------------------------------------------------------------------------
# Sweep execution


def _config_at(spec: ExperimentSpec, value: float) -> SystemConfig:
    if spec.sweep_param == "mean_t":
        return spec.system.with_dists(t_dist=spec.system.t_dist.with_mean(value))
    return spec.system.with_dists(c_dist=spec.system.c_dist.with_mean(value))


@dataclass
class _ResolvedPolicy:
    spec: PolicySpec
    scheduler: object
    sampler: object
    f_analytic: FreqVector | None  # set for random-scheduler rows
    params: dict = field(default_factory=dict)
    sampler_label: str = ""


def _zero_g(config: SystemConfig) -> list[PiecewiseFn]:
    z = dinkelbach.zero_sampler(config.t_dist)
    return [z] * config.n_sources


def _resolve_policies(spec: ExperimentSpec, config: SystemConfig):
    """Build per-policy scheduler/sampler objects for one sweep point.

    The optimized sampler is solved once and shared by every scheduler row
    that requests it; zero-wait rows under the random scheduler get the
    closed-form frequencies for the degenerate sampler.
    """
    np_mode = config.mode is ServerMode.NON_PREEMPTIVE
    opt = None
    if any(p.sampler == "optimized" for p in spec.policies):
        if np_mode:
            f_star, theta_star, trace = alternating.solve_np(config)
            opt = {
                "f": f_star,
                "sampler_obj": FixedThresholdSampler(theta_star),
                "params": {
                    "f": list(f_star),
                    "theta": list(theta_star),
                    "opt_iterations": trace.n_iterations,
                    "opt_converged": trace.converged,
                },
            }
        else:
            f_star, g_star, trace = alternating.solve_p(config)
            opt = {
                "f": f_star,
                "sampler_obj": TransmissionAwareSampler(tuple(g_star)),
                "params": {
                    "f": list(f_star),
                    "g": [gm.to_jsonable() for gm in g_star],
                    "opt_iterations": trace.n_iterations,
                    "opt_converged": trace.converged,
                },
            }
    f_zw = None
    if any(p.sampler == "zero_wait" for p in spec.policies):
        if np_mode:
            f_zw = freq_opt.optimal_f_np(config, ThresholdVector.zeros(config.n_sources))
        else:
            f_zw = freq_opt.optimal_f_p(config, _zero_g(config))
    resolved = []
    for pol in spec.policies:
        if pol.sampler == "optimized":
            sampler_obj = opt["sampler_obj"]
            f_used = opt["f"]
            params = dict(opt["params"])
        elif pol.sampler == "zero_wait":
            sampler_obj = ZeroWaitSampler()
            f_used = f_zw
            params = {"f": list(f_zw)}
        else:
            theta = ThresholdVector(pol.thresholds)
            if not np_mode:
                raise ConfigError("explicit thresholds require the non-preemptive mode")
            sampler_obj = FixedThresholdSampler(theta)
            f_used = freq_opt.optimal_f_np(config, theta)
            params = {"f": list(f_used), "theta": list(theta)}
        if pol.scheduler == "random":
            scheduler = RandomScheduler(f_used)
            f_analytic = f_used
        elif pol.scheduler == "wrr":
            scheduler = WeightedRoundRobin.from_frequencies(config.weights)
            f_analytic = None
        else:
            scheduler = MaxAgeFirst()
            f_analytic = None
        resolved.append(
            _ResolvedPolicy(
                spec=pol,
                scheduler=scheduler,
                sampler=sampler_obj,
                f_analytic=f_analytic,
                params=params,
                sampler_label=sampler_obj.name,
            )
        )
    return resolved


def _analytic_value(config: SystemConfig, rp: _ResolvedPolicy) -> float | None:
    if rp.f_analytic is None:
        return None
    if config.mode is ServerMode.NON_PREEMPTIVE:
        if isinstance(rp.sampler, FixedThresholdSampler):
            theta = rp.sampler.thresholds
        else:
            theta = ThresholdVector.zeros(config.n_sources)
        return analytic.paoi_np(config, rp.f_analytic, theta).total
    if isinstance(rp.sampler, TransmissionAwareSampler):
        g = list(rp.sampler.functions)
    else:
        g = _zero_g(config)
    return analytic.paoi_p(config, rp.f_analytic, g).total


def _sim_task(args):
    key, config, scheduler, sampler, n_packets, seed, warmup = args
    try:
        res = run(config, scheduler, sampler, n_packets, seed, warmup)
        return key, res.weighted_paoi, res.weighted_paoi_stderr, None
    except PaoiError as e:
        return key, None, None, f"{type(e).__name__}: {e}"


def run_experiment(
    spec: ExperimentSpec,
    out_dir=None,
    jobs: int = 1,
    seed_override: int | None = None,
) -> Path:
    """Execute the sweep and write the results CSV; returns the file path."""
    out_base = Path(
        out_dir if out_dir is not None else os.environ.get(OUTPUT_DIR_ENV, ".")
    )
    out_base.mkdir(parents=True, exist_ok=True)
    out_path = out_base / (spec.output or f"{spec.name}.csv")
    seeds = (seed_override,) if seed_override is not None else spec.seeds

    tasks = []
    meta = {}
    for value in spec.sweep_values:
        config = _config_at(spec, value)
        for rp in _resolve_policies(spec, config):
            ana = _analytic_value(config, rp)
            for seed in seeds:
                key = (value, rp.spec.scheduler, rp.sampler_label, seed)
                meta[key] = (ana, rp.params)
                tasks.append(
                    (key, config, rp.scheduler, rp.sampler, spec.n_packets, seed,
                     spec.warmup_fraction)
                )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sim_task, tasks))
    else:
        outcomes = [_sim_task(t) for t in tasks]

    rows = []
    for key, paoi_sim, stderr, err in outcomes:
        value, sched, samp, seed = key
        ana, params = meta[key]
        if err is not None:
            params = dict(params)
            params["error"] = err
        rows.append(
            {
                "experiment": spec.name,
                "sweep_param": spec.sweep_param,
                "sweep_value": repr(value),
                "scheduler": sched,
                "sampler": samp,
                "seed": seed,
                "paoi_analytic": "" if ana is None else repr(ana),
                "paoi_sim": "" if paoi_sim is None else repr(paoi_sim),
                "paoi_sim_stderr": "" if stderr is None else repr(stderr),
                "params_json": json.dumps(params, sort_keys=True, separators=(",", ":")),
            }
        )
    rows.sort(key=lambda r: (float(r["sweep_value"]), r["scheduler"], r["sampler"], r["seed"]))

    buf = io.StringIO()
    buf.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
    writer = csv.DictWriter(buf, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    out_path.write_text(buf.getvalue())
    return out_path


# ---------------------------------------------------------------------------
# Shipped presets


def preset_names() -> list[str]:
    root = resources.files("paoi").joinpath("presets")
    return sorted(p.name.removesuffix(".json") for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> ExperimentSpec:
    root = resources.files("paoi").joinpath("presets")
    path = root.joinpath(f"{name}.json")
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return spec_from_dict(doc)

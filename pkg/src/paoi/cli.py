"""Command-line entry point.

    paoi run <spec.json> [--out DIR] [--jobs N] [--seed-override S]
    paoi validate <spec.json>
    paoi optimize <config.json> [--g-out DIR]

``run`` executes an experiment spec (a shipped preset name is also accepted)
and writes the results CSV; the default output directory comes from the
PAOI_OUT environment variable, falling back to the working directory.
``validate`` parses a spec and echoes it in canonical form.  ``optimize``
solves one system config and prints the frequencies plus thresholds or
sampling-function knots as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import alternating, analytic, harness
from .errors import PaoiError
from .system import ServerMode, SystemConfig


def _cmd_run(args) -> int:
    spec_path = Path(args.spec)
    if spec_path.exists():
        spec = harness.validate_config(spec_path)
    else:
        spec = harness.load_preset(args.spec)
    out = harness.run_experiment(
        spec, out_dir=args.out, jobs=args.jobs, seed_override=args.seed_override
    )
    print(out)
    return 0


def _cmd_validate(args) -> int:
    spec = harness.validate_config(args.spec)
    print(json.dumps(spec.to_dict(), indent=2))
    return 0


def _cmd_optimize(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    sys_doc = doc.get("system", doc)
    config = SystemConfig.from_dict(sys_doc)
    eps = doc.get("eps")
    if config.mode is ServerMode.NON_PREEMPTIVE:
        f, theta, trace = alternating.solve_np(config, eps=eps)
        result = {
            "mode": config.mode.value,
            "f": list(f),
            "theta": list(theta),
            "paoi": analytic.paoi_np(config, f, theta).total,
            "iterations": trace.n_iterations,
            "converged": trace.converged,
        }
        g = None
    else:
        f, g, trace = alternating.solve_p(config, eps=eps)
        result = {
            "mode": config.mode.value,
            "f": list(f),
            "g": [gm.to_jsonable() for gm in g],
            "paoi": analytic.paoi_p(config, f, g).total,
            "iterations": trace.n_iterations,
            "converged": trace.converged,
        }
    print(json.dumps(result, indent=2))
    if args.g_out and g is not None:
        out = Path(args.g_out)
        out.mkdir(parents=True, exist_ok=True)
        for i, gm in enumerate(g, start=1):
            (out / f"g_source{i}.csv").write_text(gm.to_knots_csv())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paoi",
        description="Weighted peak-age experiments: evaluate, optimize, simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec or preset")
    p_run.add_argument("spec", help="path to a spec JSON, or a shipped preset name")
    p_run.add_argument("--out", default=None, help=f"output directory (default ${harness.OUTPUT_DIR_ENV} or .)")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel simulation workers")
    p_run.add_argument("--seed-override", type=int, default=None, help="replace the spec's seed list")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a spec and echo its canonical form")
    p_val.add_argument("spec")
    p_val.set_defaults(func=_cmd_validate)

    p_opt = sub.add_parser("optimize", help="optimize one system config and print the policy")
    p_opt.add_argument("config", help="JSON with a system config (optionally under 'system')")
    p_opt.add_argument("--g-out", default=None, help="directory for per-source g knot tables")
    p_opt.set_defaults(func=_cmd_optimize)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PaoiError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

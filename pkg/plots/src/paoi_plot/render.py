"""Render peak-age experiment CSVs as figures.

Input is the experiment harness's CSV contract (fixed column order:
experiment, sweep_param, sweep_value, scheduler, sampler, seed,
paoi_analytic, paoi_sim, paoi_sim_stderr, params_json).  Three figure kinds
are supported:

* ``sweep_paoi``   - weighted peak age vs the sweep value, one series per
                     (scheduler, sampler) pair, error bars from the stderr
                     column when present.
* ``thresholds``   - optimized per-source thresholds vs the sweep value.
* ``g_curves``     - one optimized sampling-function curve per sweep value
                     (knots from params_json).

Rendering is a pure function of the CSV bytes: the Agg backend, a pinned
SVG hash salt, and stripped date metadata make re-renders byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

EXPECTED_COLUMNS = (
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

KINDS = ("sweep_paoi", "thresholds", "g_curves")

matplotlib.rcParams["svg.hashsalt"] = "paoi-plot"


class PlotError(Exception):
    """Bad plot spec or input that does not satisfy the CSV contract."""


def load_rows(paths) -> list[dict]:
    rows: list[dict] = []
    for path in paths:
        text = Path(path).read_text()
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        reader = csv.DictReader(lines)
        missing = [c for c in EXPECTED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise PlotError(f"{path}: missing required columns {missing}")
        rows.extend(reader)
    if not rows:
        raise PlotError("no data rows in input")
    return rows


def parse_spec(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise PlotError("plot spec must be a JSON object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise PlotError(f"kind: expected one of {KINDS}, got {kind!r}")
    inputs = doc.get("input")
    if isinstance(inputs, str):
        inputs = [inputs]
    if not isinstance(inputs, list) or not inputs:
        raise PlotError("input: expected a CSV path or a nonempty list of paths")
    output = doc.get("output")
    if not isinstance(output, str) or not output:
        raise PlotError("output: expected an image path (.svg or .png)")
    return {
        "kind": kind,
        "inputs": inputs,
        "output": output,
        "title": doc.get("title", ""),
        "xlabel": doc.get("xlabel", ""),
        "ylabel": doc.get("ylabel", ""),
        "source": int(doc.get("source", 1)),
    }


def _series_sweep_paoi(rows):
    """(scheduler, sampler) -> sorted (x, y, yerr) arrays, seeds averaged."""
    groups = defaultdict(lambda: defaultdict(list))
    for r in rows:
        y = r["paoi_sim"] or r["paoi_analytic"]
        if not y:
            continue
        se = float(r["paoi_sim_stderr"]) if r["paoi_sim_stderr"] and r["paoi_sim"] else 0.0
        groups[(r["scheduler"], r["sampler"])][float(r["sweep_value"])].append((float(y), se))
    if not groups:
        raise PlotError("no rows carry a peak-age value")
    series = {}
    for key, by_x in sorted(groups.items()):
        xs = sorted(by_x)
        ys, errs = [], []
        for x in xs:
            pts = by_x[x]
            ys.append(sum(p[0] for p in pts) / len(pts))
            errs.append((sum(p[1] ** 2 for p in pts) / len(pts)) ** 0.5 / len(pts) ** 0.5)
        series[key] = (xs, ys, errs)
    return series


def _series_thresholds(rows):
    """sweep_value -> threshold vector (taken from the optimized rows)."""
    by_x = {}
    for r in rows:
        params = json.loads(r["params_json"]) if r["params_json"] else {}
        if "theta" in params:
            by_x.setdefault(float(r["sweep_value"]), params["theta"])
    if not by_x:
        raise PlotError("no rows carry thresholds in params_json")
    return dict(sorted(by_x.items()))


def _series_g_curves(rows, source: int):
    """sweep_value -> (grid, values) for the requested source (1-based)."""
    by_x = {}
    for r in rows:
        params = json.loads(r["params_json"]) if r["params_json"] else {}
        if "g" in params:
            curves = params["g"]
            if not 1 <= source <= len(curves):
                raise PlotError(f"source {source} out of range (file has {len(curves)})")
            g = curves[source - 1]
            by_x.setdefault(float(r["sweep_value"]), (g["grid"], g["values"]))
    if not by_x:
        raise PlotError("no rows carry sampling-function knots in params_json")
    return dict(sorted(by_x.items()))


def render(spec: dict) -> Path:
    """Render one figure per the parsed spec; returns the output path."""
    rows = load_rows(spec["inputs"])
    sweep_param = rows[0]["sweep_param"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if spec["kind"] == "sweep_paoi":
        for (sched, samp), (xs, ys, errs) in _series_sweep_paoi(rows).items():
            label = f"{sched} + {samp}"
            if any(e > 0 for e in errs):
                ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=label)
            else:
                ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel(spec["xlabel"] or f"mean {sweep_param[-1].upper()}")
        ax.set_ylabel(spec["ylabel"] or "weighted average peak age")
    elif spec["kind"] == "thresholds":
        by_x = _series_thresholds(rows)
        xs = list(by_x)
        n_sources = len(next(iter(by_x.values())))
        for m in range(n_sources):
            ax.plot(xs, [by_x[x][m] for x in xs], marker="o", label=f"source {m + 1}")
        ax.set_xlabel(spec["xlabel"] or f"mean {sweep_param[-1].upper()}")
        ax.set_ylabel(spec["ylabel"] or "optimized threshold")
    else:
        for x, (grid, values) in _series_g_curves(rows, spec["source"]).items():
            ax.plot(grid, values, label=f"{sweep_param}={x:g}")
        ax.set_xscale("log")
        ax.set_xlabel(spec["xlabel"] or "transmission time")
        ax.set_ylabel(spec["ylabel"] or f"sampling function, source {spec['source']}")
    if spec["title"]:
        ax.set_title(spec["title"])
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    out = Path(spec["output"])
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata=_clean_metadata(out.suffix), dpi=120)
    plt.close(fig)
    return out


def _clean_metadata(suffix: str):
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".png":
        return {"Software": None}
    return None


def render_file(spec_path) -> Path:
    try:
        doc = json.loads(Path(spec_path).read_text())
    except FileNotFoundError:
        raise PlotError(f"plot spec not found: {spec_path}") from None
    except json.JSONDecodeError as e:
        raise PlotError(f"{spec_path}: invalid JSON: {e.msg} (line {e.lineno})") from None
    return render(parse_spec(doc))

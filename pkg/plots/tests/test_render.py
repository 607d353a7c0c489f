"""Rendering contract: all figure kinds, determinism, diagnostics.

The fixtures are real experiment-harness outputs frozen into the repo; the
acceptance test (A13) exercises the three figure kinds, byte-identical
re-rendering, and the missing-column diagnostics.
"""

import json
from pathlib import Path

import pytest

from paoi_plot import PlotError, cli, load_rows, parse_spec, render, render_file

FIXTURES = Path(__file__).parent / "fixtures"


def spec_doc(kind, csv_name, out, **extra):
    return {"kind": kind, "input": str(FIXTURES / csv_name), "output": str(out), **extra}


def write_spec(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


# ---------------------------------------------------------------------------
# Parsing and diagnostics


def test_parse_spec_diagnostics():
    with pytest.raises(PlotError, match="kind"):
        parse_spec({"kind": "pie", "input": "x.csv", "output": "y.svg"})
    with pytest.raises(PlotError, match="input"):
        parse_spec({"kind": "sweep_paoi", "input": [], "output": "y.svg"})
    with pytest.raises(PlotError, match="output"):
        parse_spec({"kind": "sweep_paoi", "input": "x.csv"})


def test_missing_column_diagnostic(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("experiment,sweep_value\nx,0.1\n")
    with pytest.raises(PlotError, match="missing required columns"):
        load_rows([bad])


def test_empty_selection_diagnostic(tmp_path):
    # schema is fine but no row carries thresholds
    src = tmp_path / "noparams.csv"
    src.write_text(
        "experiment,sweep_param,sweep_value,scheduler,sampler,seed,"
        "paoi_analytic,paoi_sim,paoi_sim_stderr,params_json\n"
        "x,mean_t,0.1,random,zero_wait,1,4.0,4.01,0.02,\n"
    )
    spec = parse_spec(spec_doc("thresholds", "golden_sweep.csv", tmp_path / "t.svg"))
    spec["inputs"] = [str(src)]
    with pytest.raises(PlotError, match="no rows carry thresholds"):
        render(spec)


def test_g_curves_source_out_of_range(tmp_path):
    spec = parse_spec(
        spec_doc("g_curves", "golden_gcurves.csv", tmp_path / "g.svg", source=7)
    )
    with pytest.raises(PlotError, match="out of range"):
        render(spec)


# ---------------------------------------------------------------------------
# Rendering the three kinds


@pytest.mark.parametrize(
    "kind,csv_name",
    [
        ("sweep_paoi", "golden_sweep.csv"),
        ("thresholds", "golden_thresholds.csv"),
        ("g_curves", "golden_gcurves.csv"),
    ],
)
@pytest.mark.parametrize("ext", ["svg", "png"])
def test_render_all_kinds(tmp_path, kind, csv_name, ext):
    out = tmp_path / f"{kind}.{ext}"
    got = render(parse_spec(spec_doc(kind, csv_name, out)))
    assert got == out
    assert out.stat().st_size > 1000


def test_sweep_has_all_series(tmp_path):
    # 4 policies in the golden sweep: legend carries one entry each
    out = tmp_path / "s.svg"
    render(parse_spec(spec_doc("sweep_paoi", "golden_sweep.csv", out)))
    text = out.read_text()
    for label in ("random + threshold", "wrr + threshold", "maf + threshold", "random + zero_wait"):
        assert label in text


def test_byte_identical_re_render(tmp_path):
    for ext in ("svg", "png"):
        a = tmp_path / f"a.{ext}"
        b = tmp_path / f"b.{ext}"
        render(parse_spec(spec_doc("sweep_paoi", "golden_sweep.csv", a)))
        render(parse_spec(spec_doc("sweep_paoi", "golden_sweep.csv", b)))
        assert a.read_bytes() == b.read_bytes()


def test_multiple_inputs_concatenate(tmp_path):
    out = tmp_path / "multi.svg"
    doc = {
        "kind": "sweep_paoi",
        "input": [str(FIXTURES / "golden_sweep.csv"), str(FIXTURES / "golden_thresholds.csv")],
        "output": str(out),
    }
    render(parse_spec(doc))
    assert out.exists()


# ---------------------------------------------------------------------------
# CLI


def test_cli_renders(tmp_path, capsys):
    spec_path = write_spec(tmp_path, spec_doc("thresholds", "golden_thresholds.csv", tmp_path / "o.svg"))
    assert cli.main([str(spec_path)]) == 0
    assert (tmp_path / "o.svg").exists()


def test_cli_error_exit_code(tmp_path, capsys):
    spec_path = write_spec(tmp_path, {"kind": "nope", "input": "x", "output": "y.svg"})
    assert cli.main([str(spec_path)]) == 2
    assert "kind" in capsys.readouterr().err
    assert cli.main([str(tmp_path / "missing.json")]) == 2


# ---------------------------------------------------------------------------
# A13 acceptance


def test_a13_plot_contract(tmp_path):
    renders = {}
    for kind, csv_name in (
        ("sweep_paoi", "golden_sweep.csv"),
        ("thresholds", "golden_thresholds.csv"),
        ("g_curves", "golden_gcurves.csv"),
    ):
        out1 = tmp_path / f"{kind}_1.svg"
        out2 = tmp_path / f"{kind}_2.svg"
        render(parse_spec(spec_doc(kind, csv_name, out1)))
        render(parse_spec(spec_doc(kind, csv_name, out2)))
        assert out1.read_bytes() == out2.read_bytes(), f"{kind}: re-render differs"
        renders[kind] = out1.stat().st_size
    bad = tmp_path / "bad.csv"
    bad.write_text("sweep_value,paoi_sim\n0.1,4.0\n")
    with pytest.raises(PlotError, match="missing required columns"):
        render_file(write_spec(tmp_path, {"kind": "sweep_paoi", "input": str(bad), "output": str(tmp_path / 'x.svg')}))
    print(
        "A13: PASS - three figure kinds rendered from golden fixtures "
        f"(sizes {renders}), byte-identical re-renders, missing-column diagnostics fire"
    )

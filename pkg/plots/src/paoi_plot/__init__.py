"""Figure rendering for peak-age experiment CSVs (the `paoi-plot` CLI)."""

from .render import EXPECTED_COLUMNS, KINDS, PlotError, load_rows, parse_spec, render, render_file

__version__ = "0.1.0"

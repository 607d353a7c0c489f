"""Command-line entry point: ``paoi-plot <plot_spec.json>``."""

from __future__ import annotations

import argparse
import sys

from .render import PlotError, render_file


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paoi-plot",
        description="Render a peak-age experiment CSV as a figure.",
    )
    parser.add_argument("spec", help="plot spec JSON (kind, input, output)")
    args = parser.parse_args(argv)
    try:
        out = render_file(args.spec)
    except PlotError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

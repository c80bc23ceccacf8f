"""render_figure <id> <data_dir> <out_dir>"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_IDS, FigureError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figure",
        description="Render a publication-style figure from a softimpact bundle",
    )
    parser.add_argument("figure_id", choices=FIGURE_IDS)
    parser.add_argument("data_dir", help="bundle directory written by `softimpact reproduce`")
    parser.add_argument("out_dir", help="where the PNG and SVG go")
    args = parser.parse_args(argv)
    try:
        paths = render(args.figure_id, args.data_dir, args.out_dir)
    except FigureError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""CLI: `hiermc-plots render --spec <json>`."""

from __future__ import annotations

import argparse
import json
import sys

from .render import FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiermc-plots")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a spec JSON")
    p.add_argument("--spec", required=True, help="figure spec JSON file")
    p.add_argument("--summary", action="store_true", help="print the render summary")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        spec = FigureSpec.from_json_file(args.spec)
        summary = render(spec)
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.summary:
        print(json.dumps(summary))
    else:
        print(f"wrote {spec.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

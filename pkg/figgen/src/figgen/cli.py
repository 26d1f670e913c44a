"""Command line: fig {power|location|elements} --in CSV [CSV...] --out PNG."""

import argparse
import sys

from .render import FigureSpec, FormatError, render

KIND_BY_COMMAND = {
    "power": "power",
    "location": "ris_location",
    "elements": "elements",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fig", description="Render trend figures from sweep CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in KIND_BY_COMMAND:
        p = sub.add_parser(name)
        p.add_argument("--in", dest="inputs", nargs="+", required=True,
                       help="sweep CSV file(s)")
        p.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(csv_paths=tuple(args.inputs),
                      kind=KIND_BY_COMMAND[args.command], out_path=args.out)
    try:
        path = render(spec)
    except (FormatError, OSError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

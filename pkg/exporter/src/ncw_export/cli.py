"""ncw-export command line: checkpoint conversion and fixture generation."""

from __future__ import annotations

import argparse
import sys

from .export import MappingError, export_vgg19
from .fixture import make_fixture


def _widths(value: str) -> tuple[int, ...]:
    try:
        parsed = tuple(int(part) for part in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"widths must be comma-separated integers, got {value!r}")
    if not parsed or any(w < 1 for w in parsed):
        raise argparse.ArgumentTypeError(f"widths must be positive, got {value!r}")
    return parsed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncw-export",
        description="Convert VGG-19 checkpoints to NCW1 weight files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("export", help="convert a pretrained checkpoint")
    ex.add_argument("checkpoint", help="path to the checkpoint file")
    ex.add_argument("output", help="NCW1 file to write")
    ex.add_argument("--fold-normalization", action="store_true",
                    help="pre-scale conv1_1 for mean-subtracted 0..255 input")

    fx = sub.add_parser("fixture", help="generate a small random test network")
    fx.add_argument("output", help="NCW1 file to write")
    fx.add_argument("--seed", type=int, default=7)
    fx.add_argument("--widths", type=_widths, default=(4, 8, 8),
                    help="comma-separated block widths, e.g. 4,8,8")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        if args.command == "export":
            manifest = export_vgg19(
                args.checkpoint, args.output,
                fold_normalization=args.fold_normalization,
            )
            print(manifest.describe())
        else:
            path = make_fixture(args.seed, args.widths, args.output)
            print(f"wrote fixture {path} (seed {args.seed}, widths {args.widths})")
        return 0
    except MappingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

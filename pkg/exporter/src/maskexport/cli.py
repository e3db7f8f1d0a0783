"""Command line front end; flag names mirror the consumer's CLI."""

from __future__ import annotations

import argparse
import logging
import sys

from . import export, models

log = logging.getLogger(__name__)


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--engine", choices=["classic", "torch"], default="classic")
    p.add_argument("--checkpoint", help="weights file for --engine torch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maskexport")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", help="write one .flo per adjacent frame pair")
    p.add_argument("--seq", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--block", type=int, default=models.DEFAULT_BLOCK)
    p.add_argument("--radius", type=int, default=models.DEFAULT_RADIUS)
    _add_engine_flags(p)

    p = sub.add_parser("heatmaps", help="fill a pair manifest into a container")
    p.add_argument("--seq", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_engine_flags(p)

    p = sub.add_parser("reid", help="write an appearance feature table")
    p.add_argument("--seq", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", help="key vectors by tracklet id")
    p.add_argument("--detections", help="key vectors by per-frame index")
    p.add_argument("--bins", type=int, default=models.DEFAULT_BINS)
    _add_engine_flags(p)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "flow":
            export.export_flow(
                args.seq, args.out, block=args.block, radius=args.radius,
                engine=args.engine, checkpoint=args.checkpoint,
            )
        elif args.command == "heatmaps":
            export.export_heatmaps(
                args.seq, args.manifest, args.out,
                engine=args.engine, checkpoint=args.checkpoint,
            )
        else:
            export.export_reid(
                args.seq, args.out, manifest_path=args.manifest,
                detections_path=args.detections, bins=args.bins,
                engine=args.engine, checkpoint=args.checkpoint,
            )
        return 0
    except (ValueError, OSError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())

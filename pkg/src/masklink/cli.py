"""Command line entry points.

Subcommands: synth, manifest, run, eval, oracle, sweep.  All outputs are
deterministic: rerunning a command with the same inputs writes byte-identical
files.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace as dc_replace
from pathlib import Path

from . import synth
from .lta import admissible_pairs
from .metrics import EvalReport, curves_csv_lines, evaluate, format_report, report_kv_lines
from .model import Backend, PipelineConfig, RefVariant
from .oracles import oracle_lta, oracle_slta
from .pipeline import LoadedSequence, load_sequence_dir, run_pipeline
from .similarity import make_backend, pair_jobs
from .io import heatmaps as heatmaps_io
from .io import kv, mots
from .io.manifest import build_manifest, write_manifest
from .io.reid import read_reid
from .sta import build_tracklets
from .model import filter_detections

log = logging.getLogger(__name__)


def _resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Defaults, then the config file, then individual flag overrides."""
    cfg = kv.read_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    if getattr(args, "backend", None) is not None:
        overrides["backend"] = Backend(args.backend)
    if getattr(args, "theta_l", None) is not None:
        overrides["theta_l"] = args.theta_l
    if getattr(args, "ref_variant", None) is not None:
        overrides["ref_variant"] = RefVariant(args.ref_variant)
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg


def _make_similarity(cfg: PipelineConfig, seq: LoadedSequence, args: argparse.Namespace):
    """Bind the configured backend to files next to the sequence."""
    if cfg.backend is Backend.ORACLE:
        return None
    if cfg.backend is Backend.STM_HEATMAP:
        if getattr(args, "ideal_heatmaps", False):
            if seq.gt_tracks is None:
                raise ValueError("--ideal-heatmaps needs gt.txt in the sequence directory")
            provider = synth.IdealHeatmapProvider(seq.gt_tracks, seq.meta)
        elif getattr(args, "heatmaps", None):
            provider = heatmaps_io.FileHeatmapProvider(args.heatmaps)
            if (provider.width, provider.height) != (seq.meta.width, seq.meta.height):
                raise ValueError(
                    f"{args.heatmaps}: container is {provider.width}x{provider.height}, "
                    f"sequence is {seq.meta.width}x{seq.meta.height}"
                )
        else:
            raise ValueError("backend stm needs --heatmaps FILE or --ideal-heatmaps")
        return make_backend(cfg, provider=provider)
    if cfg.backend in (Backend.RGB_2X2, Backend.RGB_NXP):
        if seq.images is None:
            raise ValueError("color backends need the sequence images/ directory")
        return make_backend(cfg, images=seq.images)
    if cfg.backend in (Backend.REID_2X2, Backend.REID_NXP):
        if not getattr(args, "reid", None):
            raise ValueError(f"backend {cfg.backend.value} needs --reid FILE")
        return make_backend(cfg, features=read_reid(args.reid))
    raise ValueError(f"unsupported backend {cfg.backend.value}")


def _sta_tracklets(seq: LoadedSequence, cfg: PipelineConfig):
    filtered = [filter_detections(f, cfg, seq.meta) for f in seq.frames]
    return build_tracklets(filtered, seq.flows, cfg)


def cmd_synth(args: argparse.Namespace) -> int:
    if args.list:
        for name in synth.scenario_names():
            print(name)
        return 0
    if not args.scenario or not args.out:
        raise ValueError("synth needs --scenario and --out (or --list)")
    spec = synth.builtin_scenario(args.scenario)
    if args.seed is not None:
        spec = dc_replace(spec, seed=args.seed)
    gen = synth.generate(spec)
    synth.write_sequence(gen, args.out)
    log.info("wrote sequence %s to %s", spec.name, args.out)
    if args.ideal_heatmaps:
        cfg = _resolve_config(args)
        tracklets = _sta_tracklets(
            LoadedSequence(
                path=Path(args.out), meta=gen.meta, frames=gen.detections,
                flows=list(gen.flows), gt_tracks=gen.gt_tracks, images=None,
            ),
            cfg,
        )
        provider = gen.ideal_provider()
        by_id = {t.id: t for t in tracklets}
        entries = {}
        for cand in admissible_pairs(tracklets, cfg, gen.meta):
            for job in pair_jobs(by_id[cand.earlier], by_id[cand.later], cfg):
                key = (job.ref_tid, job.ref_frame, job.query_frame)
                if key not in entries:
                    heat = provider.propagate(
                        job.ref_tid, job.ref_frame, job.ref_mask, job.query_frame
                    )
                    entries[key] = heat.values
        heatmaps_io.write_heatmaps(
            entries, gen.meta.width, gen.meta.height, Path(args.out) / "heatmaps.bin"
        )
        log.info("wrote %d heatmaps", len(entries))
    return 0


def cmd_manifest(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    seq = load_sequence_dir(args.seq)
    tracklets = _sta_tracklets(seq, cfg)
    manifest = build_manifest(tracklets, cfg, seq.meta)
    write_manifest(manifest, args.out)
    log.info("wrote manifest with %d tracklets to %s", len(tracklets), args.out)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    need_images = cfg.backend in (Backend.RGB_2X2, Backend.RGB_NXP)
    seq = load_sequence_dir(args.seq, need_images=need_images)
    similarity = None if args.disable_lta else _make_similarity(cfg, seq, args)
    result = run_pipeline(
        seq.frames, seq.flows, cfg, seq.meta,
        similarity=similarity, gt_tracks=seq.gt_tracks, disable_lta=args.disable_lta,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mots.write_result(result.tracks, out / "result.txt")
    kv.write_kv(result.stats.kv_pairs(), out / "stats.txt")
    kv.write_config(cfg, out / "config.txt")
    log.info("wrote %d tracks to %s", len(result.tracks), out / "result.txt")
    return 0


def _evaluate_files(seq_dir: str, result_file: str) -> EvalReport:
    seq = load_sequence_dir(seq_dir)
    if seq.gt_tracks is None:
        raise ValueError(f"no gt.txt in {seq_dir}")
    preds = mots.read_result(result_file)
    return evaluate(preds, seq.gt_tracks)


def cmd_eval(args: argparse.Namespace) -> int:
    report = _evaluate_files(args.seq, args.result)
    print(format_report(report))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text("\n".join(report_kv_lines(report)) + "\n")
        (out / "curves.csv").write_text("\n".join(curves_csv_lines(report)) + "\n")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    seq = load_sequence_dir(args.seq)
    if seq.gt_tracks is None:
        raise ValueError(f"no gt.txt in {args.seq}")
    if args.kind == "lta":
        tracklets = _sta_tracklets(seq, cfg)
        tracks = oracle_lta(tracklets, seq.gt_tracks)
    else:
        filtered = [filter_detections(f, cfg, seq.meta) for f in seq.frames]
        tracks = oracle_slta([d for frame in filtered for d in frame], seq.gt_tracks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mots.write_result(tracks, out / "result.txt")
    log.info("wrote %d oracle tracks to %s", len(tracks), out / "result.txt")
    return 0


def _sweep_point(seq_dir: str, cfg: PipelineConfig, ideal_heatmaps: bool,
                 heatmaps: str | None, reid: str | None) -> EvalReport:
    """Run and evaluate one parameter setting (used by worker processes)."""
    ns = argparse.Namespace(ideal_heatmaps=ideal_heatmaps, heatmaps=heatmaps, reid=reid)
    need_images = cfg.backend in (Backend.RGB_2X2, Backend.RGB_NXP)
    seq = load_sequence_dir(seq_dir, need_images=need_images)
    similarity = _make_similarity(cfg, seq, ns)
    result = run_pipeline(
        seq.frames, seq.flows, cfg, seq.meta,
        similarity=similarity, gt_tracks=seq.gt_tracks,
    )
    if seq.gt_tracks is None:
        raise ValueError(f"no gt.txt in {seq_dir}")
    return evaluate(result.tracks, seq.gt_tracks)


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    values = [float(v) for v in args.values.split(",") if v != ""]
    if not values:
        raise ValueError("no sweep values given")
    configs = [cfg.replace(theta_l=v) for v in values]
    points = [
        (args.seq, c, args.ideal_heatmaps, args.heatmaps, args.reid) for c in configs
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_sweep_point, *zip(*points)))
    else:
        reports = [_sweep_point(*p) for p in points]

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_l", "hota", "deta", "assa", "smotsa", "motsa", "idf1"])
    for value, report in zip(values, reports):
        writer.writerow([
            repr(value), repr(report.hota), repr(report.deta), repr(report.assa),
            repr(report.smotsa), repr(report.motsa), repr(report.idf1),
        ])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(buf.getvalue())
    print(buf.getvalue(), end="")
    return 0


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--backend", choices=[b.value for b in Backend], default=None)
    p.add_argument("--theta-l", type=float, default=None, dest="theta_l",
                   help="merge similarity threshold override")
    p.add_argument("--ref-variant", choices=[v.value for v in RefVariant],
                   default=None, dest="ref_variant")


def _add_source_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--heatmaps", help="heatmap container file")
    p.add_argument("--ideal-heatmaps", action="store_true",
                   help="serve heatmaps from the sequence ground truth")
    p.add_argument("--reid", help="feature table file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="masklink")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic sequence directory")
    p.add_argument("--scenario")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--list", action="store_true", help="list scenario names")
    p.add_argument("--ideal-heatmaps", action="store_true",
                   help="also write heatmaps.bin for every admissible pair")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("manifest", help="write the tracklet pair manifest")
    p.add_argument("--seq", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_manifest)

    p = sub.add_parser("run", help="associate a sequence, write result.txt")
    p.add_argument("--seq", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--disable-lta", action="store_true",
                   help="skip merging; score-filtered tracklets are the output")
    _add_config_flags(p)
    _add_source_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("eval", help="score a result file against gt.txt")
    p.add_argument("--seq", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--out", help="also write report.txt and curves.csv here")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("oracle", help="write a ground-truth-assisted result")
    p.add_argument("--seq", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["lta", "slta"], default="lta")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("sweep", help="evaluate a grid of theta_l values")
    p.add_argument("--seq", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--values", required=True, help="comma separated theta_l values")
    p.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p)
    _add_source_flags(p)
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())

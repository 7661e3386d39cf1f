"""Command-line front end: ``ztrack {track,eval,compare,sweep,tune,synth}``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from ztrack import io as zio
from ztrack import sweep as zsweep
from ztrack.bytetrack import TrackerConfig
from ztrack.errors import GenerationError, InputError
from ztrack.metrics import EvalReport, evaluate_corpus
from ztrack.pipeline import HYBRID_BASES, MODES, MethodConfig, run_corpus
from ztrack.synth import SynthParams, generate_corpus


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _method_flags(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
    if with_mode:
        p.add_argument("--mode", choices=MODES, default="hybrid")
    p.add_argument("--track-activation", type=float, default=0.35)
    p.add_argument("--min-match", type=float, default=0.95)
    p.add_argument("--lost-buffer", type=int, default=5)
    p.add_argument("--confidence", type=float, default=0.20)
    p.add_argument("--dedup-iou", type=float, default=0.7)
    p.add_argument("--hybrid-base", choices=HYBRID_BASES, default="bidirectional")
    p.add_argument("--filter-raw", action="store_true",
                   help="spatiotemporal mode: skip the confidence cut before filtering")
    p.add_argument("--jobs", type=int, default=1)


def _method_config(args, mode: Optional[str] = None) -> MethodConfig:
    try:
        return MethodConfig(
            mode=mode or args.mode,
            tracker=TrackerConfig(args.track_activation, args.min_match, args.lost_buffer),
            confidence=args.confidence,
            dedup_iou=args.dedup_iou,
            hybrid_base=args.hybrid_base,
            filter_prefilter=not args.filter_raw,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _metadata(cfg: MethodConfig) -> dict:
    t = cfg.tracker
    return {
        "mode": cfg.mode,
        "track_activation": t.track_activation,
        "min_match": t.min_match,
        "lost_buffer": t.lost_buffer,
        "confidence": cfg.confidence,
        "dedup_iou": cfg.dedup_iou,
        "hybrid_base": cfg.hybrid_base,
        "filter_prefilter": cfg.filter_prefilter,
    }


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        zio.atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _load_pair(args):
    return zio.read_detections(args.input), zio.read_detections(args.truth, require_score=False)


def cmd_track(args) -> None:
    cfg = _method_config(args)
    volumes = zio.read_detections(args.input)
    results = run_corpus(volumes, cfg, jobs=args.jobs)
    _emit(zio.serialize_results(results, _metadata(cfg)), args.output)


def _report_text(per_study: Sequence[EvalReport], total: EvalReport) -> str:
    lines = ["scope\ttp\tfp\tfn\tprecision\trecall\tf1"]
    for r in [*per_study, total]:
        lines.append(f"{r.scope}\t{r.tp}\t{r.fp}\t{r.fn}\t{r.precision:.3f}\t{r.recall:.3f}\t{r.f1:.3f}")
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> None:
    # Score-less predictions (e.g. a truth file scored against itself) rank as 1.0.
    preds = zio.read_detections(args.input, require_score=False)
    truth = zio.read_detections(args.truth, require_score=False)
    per_study, total = evaluate_corpus(preds, truth)
    sys.stdout.write(_report_text(per_study, total))
    if args.output:
        payload = {"studies": [r.as_dict() for r in per_study], "corpus": total.as_dict()}
        zio.atomic_write(args.output, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_compare(args) -> None:
    dets, truth = _load_pair(args)
    results = []
    for mode in MODES:
        cfg = _method_config(args, mode)
        preds = run_corpus(dets, cfg, jobs=args.jobs)
        results.append((cfg, evaluate_corpus(preds, truth)[1]))
    _emit(zsweep.format_method_table(results), args.output)


def cmd_sweep(args) -> None:
    dets, truth = _load_pair(args)
    rows = zsweep.grid_search(
        dets,
        truth,
        activations=args.activations,
        min_matches=args.min_matches,
        buffers=args.buffers,
        base=_method_config(args),
        jobs=args.jobs,
    )
    _emit(zsweep.format_sweep_table(rows), args.output)


def cmd_tune(args) -> None:
    dets, truth = _load_pair(args)
    rows = zsweep.threshold_tune(dets, truth, args.thresholds)
    _emit(zsweep.format_threshold_table(rows), args.output)


def cmd_synth(args) -> None:
    try:
        params = SynthParams(
            slice_count=args.slice_count,
            lesion_count=args.lesion_count,
            dropout=args.dropout,
            clutter_rate=args.clutter_rate,
            jitter=args.jitter,
            study_id=args.study_prefix,
        )
        params.validate()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    corpus = generate_corpus(args.seed, args.studies, params)
    meta = {"generator": "synth", "seed": args.seed}
    det_text = zio.serialize_results([v.detections for v in corpus], meta)
    truth_text = zio.serialize_results([v.truth for v in corpus], meta, with_score=False)
    zio.atomic_write(args.output, det_text)
    zio.atomic_write(args.truth, truth_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ztrack",
        description="Slice-as-time tracking and filtering of volumetric detections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="run one method and write tracked detections")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    _method_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--input", required=True, help="predictions")
    p.add_argument("--truth", required=True)
    p.add_argument("--output", help="also write a JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="evaluate all five methods on one corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output")
    _method_flags(p, with_mode=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="grid search over tracker parameters")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output")
    p.add_argument("--activations", type=_float_list, default=zsweep.DEFAULT_ACTIVATIONS)
    p.add_argument("--min-matches", type=_float_list, default=zsweep.DEFAULT_MIN_MATCHES)
    p.add_argument("--buffers", type=_int_list, default=zsweep.DEFAULT_BUFFERS)
    _method_flags(p)
    p.set_defaults(func=cmd_sweep, mode="bytetrack")

    p = sub.add_parser("tune", help="baseline confidence-threshold table")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output")
    p.add_argument("--thresholds", type=_float_list, default=zsweep.DEFAULT_THRESHOLDS)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("synth", help="generate a synthetic detection/truth corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True, help="detections file")
    p.add_argument("--truth", required=True, help="ground-truth file")
    p.add_argument("--studies", type=int, default=10)
    p.add_argument("--slice-count", type=int, default=40)
    p.add_argument("--lesion-count", type=int, default=2)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--clutter-rate", type=float, default=0.2)
    p.add_argument("--jitter", type=float, default=1.0)
    p.add_argument("--study-prefix", default="synth")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InputError, GenerationError, OSError) as exc:
        print(f"ztrack {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

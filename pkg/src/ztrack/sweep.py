"""Tracker hyperparameter grid search and baseline confidence-threshold tuning."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, replace
from typing import Sequence

from ztrack.bytetrack import TrackerConfig
from ztrack.errors import InputError
from ztrack.metrics import EvalReport, evaluate_corpus
from ztrack.pipeline import MethodConfig, VolumeDetections, run_mode


def _steps(start: float, stop: float, step: float) -> list[float]:
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


DEFAULT_ACTIVATIONS = _steps(0.20, 1.0, 0.05)
DEFAULT_MIN_MATCHES = _steps(0.50, 1.0, 0.05)
DEFAULT_BUFFERS = [3, 5, 7, 9]
DEFAULT_THRESHOLDS = [0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80]


@dataclass(frozen=True)
class SweepRow:
    config: MethodConfig
    report: EvalReport


@dataclass(frozen=True)
class ThresholdRow:
    threshold: float
    report: EvalReport
    best: bool = False


def _evaluate(detections, truth, config: MethodConfig) -> EvalReport:
    preds = [run_mode(v, config) for v in detections]
    return evaluate_corpus(preds, truth)[1]


def _evaluate_point(args):
    detections, truth, config = args
    return _evaluate(detections, truth, config)


def _rank_key(row: SweepRow):
    t = row.config.tracker
    r = row.report
    return (-r.f1, -r.recall, t.track_activation, t.min_match, t.lost_buffer)


def grid_search(
    detections: Sequence[VolumeDetections],
    truth: Sequence[VolumeDetections],
    activations: Sequence[float] = DEFAULT_ACTIVATIONS,
    min_matches: Sequence[float] = DEFAULT_MIN_MATCHES,
    buffers: Sequence[int] = DEFAULT_BUFFERS,
    base: MethodConfig | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Evaluate every (activation, min_match, buffer) point and rank the results.

    Rows are sorted by descending F1, then descending recall, then ascending
    activation, min_match and buffer.
    """
    detections, truth = list(detections), list(truth)
    if not truth:
        raise InputError("grid search needs a non-empty corpus with ground truth")
    grid = list(itertools.product(activations, min_matches, buffers))
    if not grid:
        raise InputError("grid search needs at least one value per parameter")
    base = base or MethodConfig(mode="bytetrack")
    configs = [
        replace(base, tracker=TrackerConfig(float(a), float(m), int(b))) for a, m, b in grid
    ]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_evaluate_point, [(detections, truth, c) for c in configs]))
    else:
        reports = [_evaluate(detections, truth, c) for c in configs]
    rows = [SweepRow(c, r) for c, r in zip(configs, reports)]
    rows.sort(key=_rank_key)
    return rows


def threshold_tune(
    detections: Sequence[VolumeDetections],
    truth: Sequence[VolumeDetections],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> list[ThresholdRow]:
    """Baseline P/R/F1 at each confidence threshold, ascending; the first best-F1 row is marked."""
    if not thresholds:
        raise InputError("threshold tuning needs at least one threshold")
    detections, truth = list(detections), list(truth)
    rows = [
        ThresholdRow(t, _evaluate(detections, truth, MethodConfig(mode="baseline", confidence=t)))
        for t in sorted(thresholds)
    ]
    best = max(range(len(rows)), key=lambda i: (rows[i].report.f1, -i))
    rows[best] = replace(rows[best], best=True)
    return rows


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def format_sweep_table(rows: Sequence[SweepRow], delimiter: str = "\t") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["rank", "method", "track_act", "min_match", "lost_buff", "tp", "fp", "fn",
                "precision", "recall", "f1"])
    for rank, row in enumerate(rows, start=1):
        t, r = row.config.tracker, row.report
        w.writerow([rank, row.config.mode, f"{t.track_activation:.2f}", f"{t.min_match:.2f}",
                    t.lost_buffer, r.tp, r.fp, r.fn, _fmt(r.precision), _fmt(r.recall), _fmt(r.f1)])
    return buf.getvalue()


def format_threshold_table(rows: Sequence[ThresholdRow], delimiter: str = "\t") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["threshold", "tp", "fp", "fn", "precision", "recall", "f1", "best"])
    for row in rows:
        r = row.report
        w.writerow([f"{row.threshold:.2f}", r.tp, r.fp, r.fn, _fmt(r.precision), _fmt(r.recall),
                    _fmt(r.f1), "*" if row.best else ""])
    return buf.getvalue()


TRACKER_MODES = ("bytetrack", "bidirectional", "hybrid")
METHOD_LABELS = {
    "baseline": "Baseline",
    "bytetrack": "ByteTrack",
    "bidirectional": "BiDirectional",
    "hybrid": "Hybrid ByteTrack",
    "spatiotemporal": "Spatiotemporal Filter",
}


def format_method_table(results: Sequence[tuple[MethodConfig, EvalReport]], delimiter: str = "\t") -> str:
    """One row per method: tracker parameters (``n/a`` when unused) and P/R/F1."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["method", "track_act", "min_match", "lost_buff", "precision", "recall", "f1"])
    for cfg, r in results:
        t = cfg.tracker
        if cfg.mode in TRACKER_MODES:
            params = [f"{t.track_activation:.2f}", f"{t.min_match:.2f}", t.lost_buffer]
        else:
            params = ["n/a"] * 3
        w.writerow([METHOD_LABELS[cfg.mode], *params, _fmt(r.precision), _fmt(r.recall), _fmt(r.f1)])
    return buf.getvalue()

"""Slice-level TP/FP/FN counting and precision / recall / F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ztrack.bytetrack import Detection
from ztrack.errors import InputError
from ztrack.geometry import BoundingBox, iou
from ztrack.pipeline import VolumeDetections

IOU_THRESHOLD = 0.5


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    scope: str = "corpus"

    @property
    def precision(self) -> float:
        if self.tp + self.fp + self.fn == 0:
            return 1.0
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        if self.tp + self.fp + self.fn == 0:
            return 1.0
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        if self.tp + self.fp + self.fn == 0:
            return 1.0
        return f1_score(self.precision, self.recall)

    def __add__(self, other: "EvalReport") -> "EvalReport":
        return EvalReport(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, "corpus")

    def as_dict(self) -> dict:
        return {
            "scope": self.scope,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def match_slice(
    predictions: Sequence[Detection],
    truths: Sequence[BoundingBox],
    iou_threshold: float = IOU_THRESHOLD,
) -> tuple[int, int, int]:
    """Greedy matching on one slice.

    Predictions are visited by descending score (input order on ties). Each
    takes the still-unmatched truth of highest IoU (lowest index on ties) and
    counts as a true positive only if that IoU strictly exceeds the threshold.
    """
    order = sorted(range(len(predictions)), key=lambda i: -predictions[i].score)
    free = list(range(len(truths)))
    tp = 0
    for i in order:
        if not free:
            break
        box = predictions[i].box
        best_j, best = None, -1.0
        for j in free:
            v = iou(box, truths[j])
            if v > best:
                best_j, best = j, v
        if best > iou_threshold:
            free.remove(best_j)
            tp += 1
    return tp, len(predictions) - tp, len(truths) - tp


def evaluate_volume(
    pred: VolumeDetections, truth: VolumeDetections, iou_threshold: float = IOU_THRESHOLD
) -> EvalReport:
    if pred.study_id != truth.study_id:
        raise InputError(f"study id mismatch: {pred.study_id!r} vs {truth.study_id!r}")
    if pred.slice_count != truth.slice_count:
        raise InputError(
            f"study {truth.study_id!r}: prediction has {pred.slice_count} slices, "
            f"truth has {truth.slice_count}"
        )
    tp = fp = fn = 0
    for p, t in zip(pred.slices, truth.slices):
        a, b, c = match_slice(p, [d.box for d in t], iou_threshold)
        tp, fp, fn = tp + a, fp + b, fn + c
    return EvalReport(tp, fp, fn, truth.study_id)


def evaluate_corpus(
    preds: Iterable[VolumeDetections],
    truths: Iterable[VolumeDetections],
    iou_threshold: float = IOU_THRESHOLD,
) -> tuple[list[EvalReport], EvalReport]:
    """Per-study reports (truth order) and their corpus sum.

    A truth study with no prediction record counts as an empty prediction; a
    predicted study absent from the truth is an input error.
    """
    truths = list(truths)
    by_id = {}
    for p in preds:
        if p.study_id in by_id:
            raise InputError(f"duplicate predicted study {p.study_id!r}")
        by_id[p.study_id] = p
    truth_ids = {t.study_id for t in truths}
    extra = sorted(set(by_id) - truth_ids)
    if extra:
        raise InputError(f"predicted studies without ground truth: {extra}")

    per_study = []
    for t in truths:
        p = by_id.get(t.study_id) or VolumeDetections(t.study_id, [[] for _ in t.slices])
        per_study.append(evaluate_volume(p, t, iou_threshold))
    total = EvalReport(0, 0, 0)
    for r in per_study:
        total = total + r
    return per_study, total


def evaluate(pred, truth, iou_threshold: float = IOU_THRESHOLD) -> EvalReport:
    """Evaluate one study or a corpus (sequence of studies) against ground truth."""
    if isinstance(pred, VolumeDetections) and isinstance(truth, VolumeDetections):
        return evaluate_volume(pred, truth, iou_threshold)
    if isinstance(pred, VolumeDetections) or isinstance(truth, VolumeDetections):
        raise InputError("evaluate: cannot mix a single study with a corpus")
    return evaluate_corpus(pred, truth, iou_threshold)[1]

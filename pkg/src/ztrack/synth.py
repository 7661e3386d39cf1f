"""Seeded synthetic volumes with ground truth, noisy detections and isolated clutter.

Each lesion occupies a contiguous run of slices. Its box follows an
ellipsoid-slice profile (small at both ends of the run, largest in the middle)
while its centre drifts at a constant per-slice velocity. Detections are the
truth boxes with coordinate jitter and sampled scores, each independently
dropped. Clutter boxes are placed by rejection sampling so they share no area
with anything on their own or adjacent slices.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ztrack.bytetrack import Detection
from ztrack.errors import GenerationError
from ztrack.geometry import BoundingBox, iou
from ztrack.pipeline import VolumeDetections, has_neighbor_overlap

CLUTTER = -1


@dataclass(frozen=True)
class SynthParams:
    slice_count: int = 40
    lesion_count: int = 2
    lesion_span: tuple[int, int] = (3, 12)
    image_size: float = 512.0
    base_size: tuple[float, float] = (24.0, 80.0)
    # Floor on profiled box size; consecutive truth boxes keep positive overlap
    # as long as center_drift + 2 * jitter < min_size.
    min_size: float = 16.0
    center_drift: float = 3.0
    size_drift: float = 1.0
    score_beta: tuple[float, float] = (4.0, 2.0)
    score_range: tuple[float, float] = (0.0, 1.0)
    dropout: float = 0.1
    clutter_rate: float = 0.2
    clutter_size: tuple[float, float] = (10.0, 40.0)
    clutter_score_beta: tuple[float, float] = (2.0, 2.0)
    jitter: float = 1.0
    max_retries: int = 200
    study_id: str = "synth"

    def validate(self) -> None:
        lo, hi = self.lesion_span
        checks = [
            (self.slice_count >= 1, "slice_count must be >= 1"),
            (self.lesion_count >= 0, "lesion_count must be >= 0"),
            (1 <= lo <= hi, "lesion_span must satisfy 1 <= lo <= hi"),
            (0.0 <= self.dropout <= 1.0, "dropout must lie in [0, 1]"),
            (0.0 <= self.clutter_rate <= 1.0, "clutter_rate must lie in [0, 1]"),
            (0.0 < self.min_size <= self.base_size[0] <= self.base_size[1], "bad size range"),
            (0.0 < self.clutter_size[0] <= self.clutter_size[1], "bad clutter size range"),
            (self.jitter >= 0 and self.center_drift >= 0 and self.size_drift >= 0, "negative noise"),
            (
                self.center_drift + 2 * self.jitter < self.min_size,
                "center_drift + 2 * jitter must stay below min_size",
            ),
            (0.0 <= self.score_range[0] <= self.score_range[1] <= 1.0, "bad score_range"),
            (self.image_size > self.clutter_size[1], "image smaller than clutter boxes"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(f"invalid synth params: {message}")


@dataclass
class SyntheticVolume:
    """Generated study. Iterates as ``(truth, detections)``.

    ``labels`` mirrors ``detections.slices``: the lesion index that produced
    each detection, or ``CLUTTER``. ``spans`` gives each lesion's slice count.
    """

    truth: VolumeDetections
    detections: VolumeDetections
    labels: list[list[int]] = field(default_factory=list)
    spans: list[int] = field(default_factory=list)

    def __iter__(self):
        return iter((self.truth, self.detections))


def _rounded_box(x1, y1, x2, y2) -> BoundingBox:
    return BoundingBox(round(x1, 6), round(y1, 6), round(x2, 6), round(y2, 6))


def _score(rng: np.random.Generator, beta: tuple[float, float], lo: float = 0.0, hi: float = 1.0) -> float:
    return round(float(lo + (hi - lo) * rng.beta(*beta)), 6)


def _lesion_boxes(rng: np.random.Generator, p: SynthParams, span: int) -> list[BoundingBox]:
    w0, h0 = rng.uniform(*p.base_size, size=2)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    speed = rng.uniform(0.0, p.center_drift)
    vx, vy = speed * np.cos(angle), speed * np.sin(angle)
    margin = p.base_size[1] + p.center_drift * span
    cx = rng.uniform(margin, max(margin, p.image_size - margin))
    cy = rng.uniform(margin, max(margin, p.image_size - margin))
    boxes = []
    for k in range(span):
        # Ellipsoid cross-section sampled at slice midpoints: never zero.
        u = (2 * k + 1) / span - 1.0
        scale = np.sqrt(1.0 - u * u)
        w = max(p.min_size, w0 * scale)
        h = max(p.min_size, h0 * scale)
        boxes.append(_rounded_box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2))
        cx += vx
        cy += vy
        w0 = float(np.clip(w0 + rng.uniform(-p.size_drift, p.size_drift), *p.base_size))
        h0 = float(np.clip(h0 + rng.uniform(-p.size_drift, p.size_drift), *p.base_size))
    return boxes


def _jittered(rng: np.random.Generator, box: BoundingBox, jitter: float) -> BoundingBox:
    if jitter == 0:
        return box
    d = rng.uniform(-jitter, jitter, size=4)
    return _rounded_box(box.x1 + d[0], box.y1 + d[1], box.x2 + d[2], box.y2 + d[3])


def generate_volume(seed: int, params: SynthParams | None = None) -> SyntheticVolume:
    """Build one synthetic study, fully determined by ``(seed, params)``.

    Raises:
        GenerationError: if a clutter box cannot be placed within
            ``params.max_retries`` attempts, or a constructed invariant fails.
    """
    p = params or SynthParams()
    p.validate()
    rng = np.random.default_rng(seed)
    n = p.slice_count

    truth: list[list[Detection]] = [[] for _ in range(n)]
    dets: list[list[Detection]] = [[] for _ in range(n)]
    labels: list[list[int]] = [[] for _ in range(n)]
    spans = []
    for lesion in range(p.lesion_count):
        span = int(rng.integers(min(p.lesion_span[0], n), min(p.lesion_span[1], n) + 1))
        start = int(rng.integers(0, n - span + 1))
        spans.append(span)
        for k, box in enumerate(_lesion_boxes(rng, p, span)):
            z = start + k
            truth[z].append(Detection(box, 1.0, z))
            det_box = _jittered(rng, box, p.jitter)
            score = _score(rng, p.score_beta, *p.score_range)
            if rng.random() >= p.dropout:
                dets[z].append(Detection(det_box, score, z))
                labels[z].append(lesion)

    for z in range(n):
        if rng.random() >= p.clutter_rate:
            continue
        neighbours = [
            d.box for zz in (z - 1, z, z + 1) if 0 <= zz < n for d in truth[zz] + dets[zz]
        ]
        for _ in range(p.max_retries):
            w, h = rng.uniform(*p.clutter_size, size=2)
            x1 = rng.uniform(0.0, p.image_size - w)
            y1 = rng.uniform(0.0, p.image_size - h)
            box = _rounded_box(x1, y1, x1 + w, y1 + h)
            if all(iou(box, other) == 0.0 for other in neighbours):
                break
        else:
            raise GenerationError(
                f"seed {seed}: could not place isolated clutter on slice {z} "
                f"after {p.max_retries} attempts"
            )
        dets[z].append(Detection(box, _score(rng, p.clutter_score_beta), z))
        labels[z].append(CLUTTER)

    truth_vol = VolumeDetections(p.study_id, truth)
    det_vol = VolumeDetections(p.study_id, dets)
    _check_invariants(seed, truth_vol, det_vol, labels)
    return SyntheticVolume(truth_vol, det_vol, labels, spans)


def _check_invariants(seed, truth: VolumeDetections, dets: VolumeDetections, labels) -> None:
    for z, (slice_dets, slice_labels) in enumerate(zip(dets.slices, labels)):
        for det, label in zip(slice_dets, slice_labels):
            if label == CLUTTER and has_neighbor_overlap(dets, z, det):
                raise GenerationError(f"seed {seed}: clutter on slice {z} touches a neighbour")


def generate_corpus(seed: int, studies: int, params: SynthParams | None = None) -> list[SyntheticVolume]:
    """``studies`` volumes with ids ``<study_id>-000`` ... and seeds derived from ``seed``."""
    p = params or SynthParams()
    seeds = np.random.SeedSequence(seed).spawn(studies)
    out = []
    for i, ss in enumerate(seeds):
        sub = replace(p, study_id=f"{p.study_id}-{i:03d}")
        out.append(generate_volume(int(ss.generate_state(1)[0]), sub))
    return out

"""The five compared methods and the building blocks they share."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ztrack.bytetrack import Detection, TrackerConfig, run_forward
from ztrack.geometry import iou

MODES = ("baseline", "bytetrack", "bidirectional", "hybrid", "spatiotemporal")
HYBRID_BASES = ("bidirectional", "forward")


@dataclass(frozen=True)
class VolumeDetections:
    """Detections of one study, one list per slice; slice position is the z index."""

    study_id: str
    slices: list[list[Detection]]

    def __post_init__(self) -> None:
        if len(self.slices) < 1:
            raise ValueError(f"study {self.study_id!r} must have at least one slice")
        for index, dets in enumerate(self.slices):
            for det in dets:
                if det.slice_index != index:
                    raise ValueError(
                        f"study {self.study_id!r}: detection with slice_index "
                        f"{det.slice_index} stored at slice {index}"
                    )

    @property
    def slice_count(self) -> int:
        return len(self.slices)

    def count(self) -> int:
        return sum(len(s) for s in self.slices)

    def map_slices(self, fn) -> "VolumeDetections":
        return VolumeDetections(self.study_id, [list(fn(i, s)) for i, s in enumerate(self.slices)])


@dataclass(frozen=True)
class MethodConfig:
    mode: str = "hybrid"
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    confidence: float = 0.20
    dedup_iou: float = 0.7
    hybrid_base: str = "bidirectional"
    # Apply the baseline confidence cut before the spatiotemporal filter.
    filter_prefilter: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.hybrid_base not in HYBRID_BASES:
            raise ValueError(f"unknown hybrid base {self.hybrid_base!r}")
        for name in ("confidence", "dedup_iou"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def _reindex(dets: Sequence[Detection], index: int) -> list[Detection]:
    return [Detection(d.box, d.score, index, d.track_id) for d in dets]


def reverse(volume: VolumeDetections) -> VolumeDetections:
    n = volume.slice_count
    return VolumeDetections(
        volume.study_id, [_reindex(volume.slices[n - 1 - i], i) for i in range(n)]
    )


def run_backward(volume: VolumeDetections, config: TrackerConfig) -> VolumeDetections:
    """Track from the last slice to the first; output is in original slice indexing."""
    return reverse(run_forward(reverse(volume), config))


def _order_key(det: Detection):
    return (-det.score, det.box.as_tuple())


def merge_dedup(
    a: Sequence[Detection], b: Sequence[Detection], dedup_iou: float
) -> list[Detection]:
    """Union of two same-slice lists with near-duplicates collapsed.

    Candidates are visited by descending score (``a`` before ``b`` on ties) and
    a candidate is kept unless it overlaps an already kept box with
    ``IoU >= dedup_iou``.
    """
    pool = sorted(
        [(0, i, d) for i, d in enumerate(a)] + [(1, i, d) for i, d in enumerate(b)],
        key=lambda item: (-item[2].score, item[0], item[1]),
    )
    kept: list[Detection] = []
    for _, _, det in pool:
        if all(iou(det.box, k.box) < dedup_iou for k in kept):
            kept.append(det)
    kept.sort(key=_order_key)
    return kept


def _merge_volumes(a: VolumeDetections, b: VolumeDetections, dedup_iou: float) -> VolumeDetections:
    return VolumeDetections(
        a.study_id, [merge_dedup(sa, sb, dedup_iou) for sa, sb in zip(a.slices, b.slices)]
    )


def _offset_ids(volume: VolumeDetections, offset: int) -> VolumeDetections:
    def shift(i, dets):
        return [
            Detection(d.box, d.score, i, None if d.track_id is None else d.track_id + offset)
            for d in dets
        ]

    return volume.map_slices(shift)


def bidirectional(
    volume: VolumeDetections, config: TrackerConfig, dedup_iou: float = 0.7
) -> VolumeDetections:
    """Slice-wise union of the forward and backward passes.

    Backward track ids are shifted past the largest forward id so ids stay
    unique within the merged output.
    """
    forward = run_forward(volume, config)
    backward = run_backward(volume, config)
    top = max((d.track_id for s in forward.slices for d in s), default=0)
    return _merge_volumes(forward, _offset_ids(backward, top), dedup_iou)


def confidence_cut(volume: VolumeDetections, confidence: float) -> VolumeDetections:
    """Raw detections with ``score > confidence`` (strict)."""
    return volume.map_slices(lambda i, dets: [d for d in dets if d.score > confidence])


def hybrid(
    volume: VolumeDetections,
    config: TrackerConfig,
    confidence: float = 0.20,
    dedup_iou: float = 0.7,
    base: str = "bidirectional",
) -> VolumeDetections:
    """Tracker output fused with every raw detection above ``confidence``."""
    if base == "bidirectional":
        tracked = bidirectional(volume, config, dedup_iou)
    elif base == "forward":
        tracked = run_forward(volume, config)
    else:
        raise ValueError(f"unknown hybrid base {base!r}")
    return _merge_volumes(tracked, confidence_cut(volume, confidence), dedup_iou)


def has_neighbor_overlap(volume: VolumeDetections, index: int, det: Detection) -> bool:
    """True when ``det`` overlaps (IoU > 0) some box on an adjacent slice of ``volume``."""
    for z in (index - 1, index + 1):
        if 0 <= z < volume.slice_count:
            if any(iou(det.box, other.box) > 0.0 for other in volume.slices[z]):
                return True
    return False


def spatiotemporal_filter(volume: VolumeDetections) -> VolumeDetections:
    """Drop boxes with no positive overlap on either adjacent slice.

    Neighbours are always looked up in the input volume, so the result is a
    single-pass predicate. A one-slice volume is returned unchanged.
    """
    if volume.slice_count == 1:
        return volume.map_slices(lambda i, dets: dets)
    return volume.map_slices(
        lambda i, dets: [d for d in dets if has_neighbor_overlap(volume, i, d)]
    )


def run_mode(volume: VolumeDetections, config: MethodConfig) -> VolumeDetections:
    mode = config.mode
    if mode == "baseline":
        return confidence_cut(volume, config.confidence)
    if mode == "bytetrack":
        return run_forward(volume, config.tracker)
    if mode == "bidirectional":
        return bidirectional(volume, config.tracker, config.dedup_iou)
    if mode == "hybrid":
        return hybrid(
            volume, config.tracker, config.confidence, config.dedup_iou, config.hybrid_base
        )
    if mode == "spatiotemporal":
        source = confidence_cut(volume, config.confidence) if config.filter_prefilter else volume
        return spatiotemporal_filter(source)
    raise ValueError(f"unknown mode {mode!r}")


def run_corpus(volumes: Sequence[VolumeDetections], config: MethodConfig, jobs: int = 1):
    """Apply :func:`run_mode` to every study; output order follows input order."""
    if jobs <= 1 or len(volumes) <= 1:
        return [run_mode(v, config) for v in volumes]
    from concurrent.futures import ProcessPoolExecutor
    from functools import partial

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(partial(run_mode, config=config), volumes))

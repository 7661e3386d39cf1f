"""Single-direction two-stage (ByteTrack-style) tracker over a slice sequence.

Each slice is one step. High-score detections are associated first with
active and lost tracks; low-score detections can then only extend tracks that
are currently active. New tracks start tentative and are reported from their
second matched slice onwards, except on the very first slice of a pass where
they are reported immediately.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from ztrack import kalman
from ztrack.assignment import solve
from ztrack.geometry import BoundingBox, iou_matrix

if TYPE_CHECKING:
    from ztrack.pipeline import VolumeDetections


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    score: float
    slice_index: int
    track_id: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if self.slice_index < 0:
            raise ValueError(f"slice_index must be non-negative, got {self.slice_index}")


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker hyperparameters.

    ``min_match`` is a gate in cost space: a pairing is rejected when
    ``1 - IoU > min_match``.
    """

    track_activation: float = 0.35
    min_match: float = 0.95
    lost_buffer: int = 5

    def __post_init__(self) -> None:
        for name in ("track_activation", "min_match"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.lost_buffer < 1:
            raise ValueError(f"lost_buffer must be >= 1, got {self.lost_buffer}")


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"
    REMOVED = "removed"


@dataclass
class Track:
    id: int
    state: kalman.KalmanState
    status: TrackStatus
    score: float
    frames_since_update: int = 0
    history: list[tuple[int, BoundingBox, float]] = field(default_factory=list)

    def predicted_xyxy(self) -> tuple[float, float, float, float]:
        return self.state.to_xyxy()


@dataclass
class TrackerState:
    """Mutable per-pass tracker state: live tracks plus the step counter."""

    config: TrackerConfig
    tracks: list[Track] = field(default_factory=list)
    removed: list[Track] = field(default_factory=list)
    frame: int = 0
    next_id: int = 1


def _associate(tracks: list[Track], dets: list[Detection], gate: float):
    if not tracks or not dets:
        return [], list(range(len(tracks))), list(range(len(dets)))
    cost = 1.0 - iou_matrix([t.predicted_xyxy() for t in tracks], [d.box for d in dets])
    return solve(cost, gate)


def _apply_match(track: Track, det: Detection) -> None:
    track.state = kalman.update(track.state, det.box)
    track.status = TrackStatus.ACTIVE
    track.frames_since_update = 0
    track.score = det.score
    track.history.append((det.slice_index, det.box, det.score))


def split_detections(dets: list[Detection], track_activation: float):
    """Partition into (high, low) groups; zero-score detections are dropped."""
    high = [d for d in dets if d.score >= track_activation]
    low = [d for d in dets if 0.0 < d.score < track_activation]
    return high, low


def step(tracker: TrackerState, detections: list[Detection]) -> list[tuple[int, BoundingBox, float]]:
    """Advance the tracker by one slice.

    Returns:
        ``(track_id, box, score)`` for every active track matched or confirmed
        on this slice, ordered by track id. Boxes are the matched detections'
        own boxes, never Kalman predictions.
    """
    cfg = tracker.config
    first = tracker.frame == 0
    tracker.frame += 1

    for t in tracker.tracks:
        t.state = kalman.predict(t.state)

    high, low = split_detections(detections, cfg.track_activation)
    reported: list[tuple[int, Detection]] = []
    matched_ids: set[int] = set()

    # Stage 1: confirmed tracks (active or lost) against high-score detections.
    pool = [t for t in tracker.tracks if t.status in (TrackStatus.ACTIVE, TrackStatus.LOST)]
    matches, um_tracks, um_high = _associate(pool, high, cfg.min_match)
    for ti, di in matches:
        _apply_match(pool[ti], high[di])
        matched_ids.add(pool[ti].id)
        reported.append((pool[ti].id, high[di]))
    remaining_high = [high[i] for i in um_high]

    # Stage 2: still-active tracks against low-score detections.
    active_left = [pool[i] for i in um_tracks if pool[i].status is TrackStatus.ACTIVE]
    matches, _, _ = _associate(active_left, low, cfg.min_match)
    for ti, di in matches:
        _apply_match(active_left[ti], low[di])
        matched_ids.add(active_left[ti].id)
        reported.append((active_left[ti].id, low[di]))

    # Tentative tracks confirm only against leftover high detections.
    tentative = [t for t in tracker.tracks if t.status is TrackStatus.TENTATIVE]
    matches, _, um_high = _associate(tentative, remaining_high, cfg.min_match)
    for ti, di in matches:
        _apply_match(tentative[ti], remaining_high[di])
        matched_ids.add(tentative[ti].id)
        reported.append((tentative[ti].id, remaining_high[di]))
    remaining_high = [remaining_high[i] for i in um_high]

    for t in tracker.tracks:
        if t.id in matched_ids:
            continue
        t.frames_since_update += 1
        if t.status is TrackStatus.ACTIVE:
            t.status = TrackStatus.LOST
        if t.frames_since_update > cfg.lost_buffer:
            t.status = TrackStatus.REMOVED

    new_tracks = []
    for det in remaining_high:
        track = Track(
            id=tracker.next_id,
            state=kalman.initiate(det.box),
            status=TrackStatus.ACTIVE if first else TrackStatus.TENTATIVE,
            score=det.score,
            history=[(det.slice_index, det.box, det.score)],
        )
        tracker.next_id += 1
        new_tracks.append(track)
        if first:
            reported.append((track.id, det))

    tracker.removed.extend(t for t in tracker.tracks if t.status is TrackStatus.REMOVED)
    tracker.tracks = [t for t in tracker.tracks if t.status is not TrackStatus.REMOVED] + new_tracks

    reported.sort(key=lambda item: item[0])
    return [(tid, det.box, det.score) for tid, det in reported]


def run_forward(volume: VolumeDetections, config: TrackerConfig) -> VolumeDetections:
    """Track slices in ascending order; output keeps only reported boxes, tagged with track ids."""
    from ztrack.pipeline import VolumeDetections

    tracker = TrackerState(config)
    out = []
    for index, dets in enumerate(volume.slices):
        reported = step(tracker, dets)
        out.append([Detection(box, score, index, tid) for tid, box, score in reported])
    return VolumeDetections(volume.study_id, out)


def high_count(volume: VolumeDetections, track_activation: float) -> np.ndarray:
    """Per-slice size of the high-score group."""
    return np.array([len(split_detections(s, track_activation)[0]) for s in volume.slices])


__all__ = [
    "Detection",
    "Track",
    "TrackStatus",
    "TrackerConfig",
    "TrackerState",
    "high_count",
    "run_forward",
    "split_detections",
    "step",
]

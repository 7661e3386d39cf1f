"""Axis-aligned boxes and Intersection-over-Union."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Corner-form box ``(x1, y1, x2, y2)`` in pixel coordinates.

    Negative coordinates are allowed; zero-area, inverted and non-finite
    boxes are rejected.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite box coordinates: {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"box must have positive width and height: {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def _iou_xyxy(a: Sequence[float], b: Sequence[float]) -> float:
    # Operates on raw corner tuples so that degenerate Kalman predictions
    # can be scored (as 0) without constructing a BoundingBox.
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    if area_a <= 0.0 or area_b <= 0.0:
        return 0.0
    return min(1.0, inter / (area_a + area_b - inter))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area of two boxes, in ``[0, 1]``."""
    return _iou_xyxy(a.as_tuple(), b.as_tuple())


def iou_matrix(rows: Sequence, cols: Sequence) -> np.ndarray:
    """Pairwise IoU, shape ``(len(rows), len(cols))``.

    Entries may be :class:`BoundingBox` instances or raw ``(x1, y1, x2, y2)``
    sequences. Each entry is computed by the same scalar routine as
    :func:`iou`, so the two agree exactly.
    """
    a = [r.as_tuple() if isinstance(r, BoundingBox) else tuple(r) for r in rows]
    b = [c.as_tuple() if isinstance(c, BoundingBox) else tuple(c) for c in cols]
    out = np.zeros((len(a), len(b)), dtype=float)
    for i, ra in enumerate(a):
        for j, cb in enumerate(b):
            out[i, j] = _iou_xyxy(ra, cb)
    return out

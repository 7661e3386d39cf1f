"""Line-delimited JSON exchange format for detections, tracks and ground truth.

One record per (study, slice)::

    {"study_id": "s1", "slice_count": 3, "slice_index": 1,
     "boxes": [{"x1": 0.0, "y1": 0.0, "x2": 10.0, "y2": 10.0, "score": 0.9}]}

An optional first line ``{"format": "ztrack", "version": 1, ...}`` carries
metadata. Boxes may also carry ``track_id``; ground-truth files omit
``score``. Slices without a record are empty. See ``docs/format.md``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from ztrack.bytetrack import Detection
from ztrack.errors import InputError
from ztrack.geometry import BoundingBox
from ztrack.pipeline import VolumeDetections

FORMAT_NAME = "ztrack"
FORMAT_VERSION = 1
_COORDS = ("x1", "y1", "x2", "y2")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _parse_box(raw, lineno: int, slice_index: int, require_score: bool) -> Detection:
    if not isinstance(raw, dict):
        raise InputError(f"line {lineno}: box entry must be an object")
    for key in _COORDS:
        if not _is_number(raw.get(key)):
            raise InputError(f"line {lineno}: box field {key!r} missing or not a finite number")
    try:
        box = BoundingBox(*(float(raw[k]) for k in _COORDS))
    except ValueError as exc:
        raise InputError(f"line {lineno}: invalid box: {exc}") from None
    if "score" in raw:
        score = raw["score"]
        if not _is_number(score) or not 0.0 <= score <= 1.0:
            raise InputError(f"line {lineno}: score must be a number in [0, 1], got {score!r}")
        score = float(score)
    elif require_score:
        raise InputError(f"line {lineno}: box is missing 'score'")
    else:
        score = 1.0
    track_id = raw.get("track_id")
    if track_id is not None and (not _is_int(track_id) or track_id < 1):
        raise InputError(f"line {lineno}: track_id must be a positive integer, got {track_id!r}")
    return Detection(box, score, slice_index, track_id)


def parse_detections(lines: Iterable[str], require_score: bool = True) -> list[VolumeDetections]:
    """Parse a record stream into studies, in order of first appearance.

    Args:
        lines: Text lines (a file object works).
        require_score: ``False`` for ground truth, where a missing score means 1.0.

    Raises:
        InputError: on any malformed or inconsistent line; the message starts
            with the 1-based line number.
    """
    counts: dict[str, int] = {}
    slices: dict[str, dict[int, list[Detection]]] = {}
    seen_record = False
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"line {lineno}: not valid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise InputError(f"line {lineno}: record must be a JSON object")
        if "format" in rec:
            if seen_record:
                raise InputError(f"line {lineno}: header must precede all records")
            if rec["format"] != FORMAT_NAME or rec.get("version") != FORMAT_VERSION:
                raise InputError(
                    f"line {lineno}: unsupported format {rec.get('format')!r} "
                    f"version {rec.get('version')!r}"
                )
            continue
        seen_record = True

        study = rec.get("study_id")
        count = rec.get("slice_count")
        index = rec.get("slice_index")
        boxes = rec.get("boxes")
        if not isinstance(study, str):
            raise InputError(f"line {lineno}: 'study_id' must be a string")
        if not _is_int(count) or count < 1:
            raise InputError(f"line {lineno}: 'slice_count' must be a positive integer")
        if not _is_int(index) or index < 0:
            raise InputError(f"line {lineno}: 'slice_index' must be a non-negative integer")
        if index >= count:
            raise InputError(f"line {lineno}: slice_index {index} >= slice_count {count}")
        if not isinstance(boxes, list):
            raise InputError(f"line {lineno}: 'boxes' must be a list")
        if study in counts and counts[study] != count:
            raise InputError(
                f"line {lineno}: study {study!r} declared with slice_count {count}, "
                f"previously {counts[study]}"
            )
        per_slice = slices.setdefault(study, {})
        counts[study] = count
        if index in per_slice:
            raise InputError(f"line {lineno}: duplicate record for study {study!r} slice {index}")
        per_slice[index] = [_parse_box(b, lineno, index, require_score) for b in boxes]

    return [
        VolumeDetections(study, [slices[study].get(i, []) for i in range(counts[study])])
        for study in counts
    ]


def read_detections(path, require_score: bool = True) -> list[VolumeDetections]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return parse_detections(fh, require_score)


def _num(v: float) -> str:
    return f"{v + 0.0:.6f}"


def _box_sort_key(det: Detection):
    return (-det.score, det.box.as_tuple())


def format_record(
    study_id: str, slice_count: int, slice_index: int, dets: Sequence[Detection], with_score: bool = True
) -> str:
    parts = []
    for d in sorted(dets, key=_box_sort_key):
        fields = [f'"{k}": {_num(v)}' for k, v in zip(_COORDS, d.box.as_tuple())]
        if with_score:
            fields.append(f'"score": {_num(d.score)}')
        if d.track_id is not None:
            fields.append(f'"track_id": {d.track_id}')
        parts.append("{" + ", ".join(fields) + "}")
    return (
        f'{{"study_id": {json.dumps(study_id)}, "slice_count": {slice_count}, '
        f'"slice_index": {slice_index}, "boxes": [{", ".join(parts)}]}}'
    )


def serialize_results(
    volumes: Sequence[VolumeDetections] | VolumeDetections,
    metadata: Optional[Mapping] = None,
    with_score: bool = True,
) -> str:
    """Render studies in canonical, byte-stable form.

    Studies are sorted by id, slices ascending, boxes by descending score then
    coordinates; every float has six decimals. Empty slices are omitted, so an
    all-empty input yields the header line only.
    """
    if isinstance(volumes, VolumeDetections):
        volumes = [volumes]
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    header.update(metadata or {})
    lines = [json.dumps(header, sort_keys=True)]
    for vol in sorted(volumes, key=lambda v: v.study_id):
        for index, dets in enumerate(vol.slices):
            if dets:
                lines.append(format_record(vol.study_id, vol.slice_count, index, dets, with_score))
    return "\n".join(lines) + "\n"


def atomic_write(path, text: str) -> None:
    """Write via a temporary sibling file and rename, so readers never see a partial file."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

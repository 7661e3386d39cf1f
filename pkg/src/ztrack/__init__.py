"""Slice-as-time lesion tracking and filtering for volumetric detection streams."""

from ztrack.errors import GenerationError, InputError
from ztrack.geometry import BoundingBox, iou, iou_matrix
from ztrack.bytetrack import Detection, Track, TrackerConfig, run_forward
from ztrack.pipeline import MethodConfig, VolumeDetections, run_mode
from ztrack.metrics import EvalReport, evaluate, match_slice

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "Detection",
    "EvalReport",
    "GenerationError",
    "InputError",
    "MethodConfig",
    "Track",
    "TrackerConfig",
    "VolumeDetections",
    "evaluate",
    "iou",
    "iou_matrix",
    "match_slice",
    "run_forward",
    "run_mode",
]

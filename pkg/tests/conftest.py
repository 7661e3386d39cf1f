from __future__ import annotations

import pytest

from ztrack.bytetrack import Detection
from ztrack.geometry import BoundingBox
from ztrack.pipeline import VolumeDetections


def make_volume(n, content=None, study="s1"):
    """``content`` maps slice index -> list of ((x1, y1, x2, y2), score)."""
    slices = [[] for _ in range(n)]
    for z, items in (content or {}).items():
        slices[z] = [Detection(BoundingBox(*b), s, z) for b, s in items]
    return VolumeDetections(study, slices)


def lesion_volume(n, first, last, score=0.9, box=(100, 100, 140, 130), study="s1"):
    """Same box on 0-based slices ``first..last`` inclusive."""
    return make_volume(n, {z: [(box, score)] for z in range(first, last + 1)}, study)


def covered(volume):
    return {z for z, dets in enumerate(volume.slices) if dets}


@pytest.fixture
def golden_volume():
    return make_volume(
        2,
        {
            0: [((10, 10, 30, 30), 0.9), ((100, 100, 120, 120), 0.15)],
            1: [((12, 10, 32, 30), 0.25), ((200, 200, 220, 220), 0.5)],
        },
        study="g1",
    )


_ACCEPTANCE: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[0].lstrip("AC"))):
        terminalreporter.write_line(f"[{_ACCEPTANCE[label]}] {label}")

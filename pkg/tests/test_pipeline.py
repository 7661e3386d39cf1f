import pytest

from conftest import covered, lesion_volume, make_volume
from ztrack.bytetrack import Detection, TrackerConfig, run_forward
from ztrack.geometry import BoundingBox, iou
from ztrack.metrics import evaluate
from ztrack.pipeline import (
    MethodConfig,
    VolumeDetections,
    bidirectional,
    has_neighbor_overlap,
    hybrid,
    merge_dedup,
    run_backward,
    run_mode,
    spatiotemporal_filter,
)
from ztrack.synth import CLUTTER, SynthParams, generate_volume

CFG = TrackerConfig()


def d(box, score, z=0, tid=None):
    return Detection(BoundingBox(*box), score, z, tid)


def _synth(seed, **kw):
    return generate_volume(seed, SynthParams(**kw))


# --- volume type -----------------------------------------------------------

def test_volume_rejects_misplaced_detection():
    with pytest.raises(ValueError):
        VolumeDetections("s", [[d((0, 0, 1, 1), 0.5, z=1)]])
    with pytest.raises(ValueError):
        VolumeDetections("s", [])


# --- backward / bidirectional ----------------------------------------------

def test_backward_empty():
    assert covered(run_backward(make_volume(6), CFG)) == set()


def test_backward_lag_on_last_slices():
    # 1-based slices 5-9 of 10 -> 0-based 4..8; backward first frame (slice 10) is empty
    out = run_backward(lesion_volume(10, 4, 8), CFG)
    assert covered(out) == {4, 5, 6, 7}
    assert all(det.slice_index == z for z, s in enumerate(out.slices) for det in s)


def test_backward_single_slice_volume_equals_forward():
    vol = make_volume(1, {0: [((0, 0, 10, 10), 0.9), ((50, 50, 60, 60), 0.2)]})
    assert run_backward(vol, CFG) == run_forward(vol, CFG)


def test_bidirectional_covers_lesion_from_first_slice():
    vol = lesion_volume(10, 0, 4)
    assert covered(run_forward(vol, CFG)) == {0, 1, 2, 3, 4}
    assert covered(run_backward(vol, CFG)) == {0, 1, 2, 3}
    assert covered(bidirectional(vol, CFG)) == {0, 1, 2, 3, 4}


def test_single_interior_slice_suppressed_by_both_passes():
    assert covered(bidirectional(lesion_volume(10, 5, 5, score=0.99), CFG)) == set()


def test_palindromic_volume_mirrors():
    content = {0: [((0, 0, 20, 20), 0.9)], 1: [((2, 0, 22, 20), 0.6)], 3: [((50, 50, 70, 80), 0.8)]}
    content.update({6 - z: items for z, items in content.items()})
    vol = make_volume(7, content)
    fwd, bwd = run_forward(vol, CFG), run_backward(vol, CFG)
    n = vol.slice_count
    for z in range(n):
        assert [(x.box, x.score, x.track_id) for x in fwd.slices[z]] == [
            (x.box, x.score, x.track_id) for x in bwd.slices[n - 1 - z]
        ]


def test_bidirectional_track_ids_unique_across_passes():
    # Lesion A on 0..4, lesion B on 5..9 (disjoint boxes). Forward ids: A=1, B=2
    # (B tentative at 5). Backward ids B=1, A=2, shifted past forward max -> 3, 4;
    # backward alone covers slice 5, forward alone covers slice 4.
    a, b = (0, 0, 20, 20), (100, 100, 120, 120)
    content = {z: [(a, 0.9)] for z in range(5)}
    content.update({z: [(b, 0.9)] for z in range(5, 10)})
    out = bidirectional(make_volume(10, content), CFG)
    assert [x.track_id for x in out.slices[4]] == [1]
    assert [x.track_id for x in out.slices[5]] == [3]
    assert covered(out) == set(range(10))


# --- merge_dedup -----------------------------------------------------------

def test_merge_identical_lists():
    a = [d((0, 0, 10, 10), 0.9), d((30, 30, 40, 40), 0.5)]
    assert merge_dedup(a, list(a), 0.7) == a


def test_merge_keeps_higher_score():
    # iou((0,0,100,100), (0,0,100,90)) = 0.9
    hi, lo = d((0, 0, 100, 100), 0.8), d((0, 0, 100, 90), 0.6)
    assert merge_dedup([lo], [hi], 0.7) == [hi]


def test_merge_disjoint_keeps_both():
    a, b = d((0, 0, 10, 10), 0.3), d((20, 20, 30, 30), 0.7)
    assert merge_dedup([a], [b], 0.7) == [b, a]


def test_merge_tie_prefers_first_list():
    a, b = d((0, 0, 10, 10), 0.5, tid=3), d((0, 0, 10, 10), 0.5)
    assert merge_dedup([a], [b], 0.7)[0].track_id == 3


# --- hybrid ----------------------------------------------------------------

def test_hybrid_keeps_isolated_confident_box():
    vol = lesion_volume(10, 5, 5, score=0.9)
    assert covered(hybrid(vol, CFG)) == {5}


def test_hybrid_drops_isolated_weak_box():
    vol = lesion_volume(10, 5, 5, score=0.15)
    assert covered(hybrid(vol, CFG)) == set()


def test_hybrid_stage_two_boxes_survive():
    box = (100, 100, 140, 130)
    for score in (0.25, 0.15):
        content = {0: [(box, 0.9)], 1: [(box, score)], 2: [(box, 0.9)]}
        out = hybrid(make_volume(3, content), CFG)
        assert [(x.score, x.track_id is not None) for x in out.slices[1]] == [(score, True)]


def test_hybrid_base_forward_option():
    vol = _synth(4, slice_count=30, lesion_count=3).detections
    a = hybrid(vol, CFG, base="forward")
    b = run_mode(vol, MethodConfig(mode="hybrid", hybrid_base="forward"))
    assert a == b


# --- spatiotemporal filter -------------------------------------------------

def test_filter_removes_isolated_box():
    vol = make_volume(5, {2: [((0, 0, 10, 10), 0.9)]})
    assert covered(spatiotemporal_filter(vol)) == set()


def test_filter_keeps_adjacent_pair():
    vol = make_volume(5, {2: [((0, 0, 10, 10), 0.9)], 3: [((0, 0, 10, 10), 0.4)]})
    assert covered(spatiotemporal_filter(vol)) == {2, 3}


def test_filter_chain_uses_original_input():
    a, b, c = (0, 0, 10, 10), (8, 0, 18, 10), (16, 0, 26, 10)
    assert iou(BoundingBox(*a), BoundingBox(*c)) == 0
    vol = make_volume(5, {1: [(a, 0.9)], 2: [(b, 0.9)], 3: [(c, 0.9)]})
    assert covered(spatiotemporal_filter(vol)) == {1, 2, 3}


def test_filter_boundary_and_single_slice():
    vol = make_volume(2, {0: [((0, 0, 10, 10), 0.9)], 1: [((5, 5, 15, 15), 0.9)]})
    assert covered(spatiotemporal_filter(vol)) == {0, 1}
    one = make_volume(1, {0: [((0, 0, 10, 10), 0.9)]})
    assert spatiotemporal_filter(one) == one


def test_filter_touching_edges_do_not_count():
    vol = make_volume(3, {0: [((0, 0, 10, 10), 0.9)], 1: [((10, 0, 20, 10), 0.9)]})
    assert covered(spatiotemporal_filter(vol)) == set()


@pytest.mark.parametrize("seed", range(10))
def test_filter_is_the_predicate(seed):
    vol = _synth(seed, slice_count=30, lesion_count=3, clutter_rate=0.3).detections
    out = spatiotemporal_filter(vol)
    for z, dets in enumerate(vol.slices):
        expected = [x for x in dets if has_neighbor_overlap(vol, z, x)]
        assert out.slices[z] == expected


# --- run_mode --------------------------------------------------------------

def test_baseline_strict_threshold():
    vol = make_volume(1, {0: [((0, 0, 10, 10), 0.19), ((20, 20, 30, 30), 0.21), ((40, 40, 50, 50), 0.2)]})
    out = run_mode(vol, MethodConfig(mode="baseline"))
    assert [x.score for x in out.slices[0]] == [0.21]


def test_bytetrack_mode_is_forward():
    vol = _synth(2, slice_count=30).detections
    assert run_mode(vol, MethodConfig(mode="bytetrack")) == run_forward(vol, CFG)


def test_hybrid_mode_on_empty_volume():
    assert covered(run_mode(make_volume(8), MethodConfig(mode="hybrid"))) == set()


def test_spatiotemporal_prefilter_flag():
    vol = make_volume(3, {0: [((0, 0, 10, 10), 0.1)], 1: [((0, 0, 10, 10), 0.9)]})
    cut = run_mode(vol, MethodConfig(mode="spatiotemporal"))
    raw = run_mode(vol, MethodConfig(mode="spatiotemporal", filter_prefilter=False))
    assert covered(cut) == set()
    assert covered(raw) == {0, 1}


def test_method_config_validation():
    with pytest.raises(ValueError):
        MethodConfig(mode="nope")
    with pytest.raises(ValueError):
        MethodConfig(confidence=1.5)


# --- properties over synthetic volumes -------------------------------------

def _has_match(det, dets, thr):
    return any(iou(det.box, other.box) >= thr for other in dets)


@pytest.mark.parametrize("seed", range(25))
def test_union_and_retention_properties(seed):
    sv = _synth(seed, slice_count=40, lesion_count=3)
    vol = sv.detections
    fwd = run_forward(vol, CFG)
    bi = bidirectional(vol, CFG)
    hy = hybrid(vol, CFG)
    for z in range(vol.slice_count):
        assert all(_has_match(x, bi.slices[z], 0.7) for x in fwd.slices[z])
        assert all(_has_match(x, hy.slices[z], 0.7) for x in vol.slices[z] if x.score > 0.2)
    r_f = evaluate(fwd, sv.truth).recall
    r_b = evaluate(bi, sv.truth).recall
    r_h = evaluate(hy, sv.truth).recall
    assert r_h >= r_b >= r_f


@pytest.mark.parametrize("seed", range(10))
def test_filter_contraction(seed):
    sv = _synth(seed, slice_count=40, lesion_count=3, clutter_rate=0.4)
    out = run_mode(sv.detections, MethodConfig(mode="spatiotemporal"))
    for z, dets in enumerate(out.slices):
        assert all(x in sv.detections.slices[z] for x in dets)
    # constructed clutter never survives
    clutter = {
        (z, x) for z, (ds, ls) in enumerate(zip(sv.detections.slices, sv.labels))
        for x, label in zip(ds, ls) if label == CLUTTER
    }
    assert not any((z, x) in clutter for z, ds in enumerate(out.slices) for x in ds)

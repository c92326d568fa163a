import numpy as np
import pytest

from helpers import box, gt, pred, dataset
from visdiag.overlap import compute_overlaps, frame_ious, sequence_iou, temporal_overlap


def pixel_seq_iou(a_frames, b_frames, h, w):
    """Stack the frames into a volume and count voxels."""
    def vol(frames):
        return np.stack([np.zeros((h, w), bool) if f is None else f for f in frames])
    a, b = vol(a_frames), vol(b_frames)
    u = (a | b).sum()
    return (a & b).sum() / u if u else 0.0


def test_two_frame_example():
    # frame 1: inter 2, union 6; frame 2: inter 4, union 4
    a1 = box(4, 4, 0, 1, 0, 4)
    b1 = box(4, 4, 0, 1, 2, 4) | box(4, 4, 1, 2, 2, 4)
    a2 = b2 = box(4, 4, 0, 2, 0, 2)
    g = gt(1, 1, 1, [a1, a2])
    p = pred(1, 1, 0.9, [b1, b2])
    assert sequence_iou(g, p) == pytest.approx(0.6)
    ious = frame_ious(g, p)
    assert ious[0] == pytest.approx(1 / 3)
    assert ious[1] == 1.0


def test_identical_and_disjoint():
    f = box(5, 5, 1, 3, 1, 3)
    g = gt(1, 1, 1, [f, f])
    assert sequence_iou(g, pred(1, 1, 1.0, [f, f])) == 1.0
    other = box(5, 5, 3, 5, 3, 5)
    assert sequence_iou(g, pred(1, 1, 1.0, [other, other])) == 0.0


def test_frame_iou_undefined_when_both_empty():
    f = box(3, 3, 0, 1, 0, 1)
    ious = frame_ious(gt(1, 1, 1, [f, None]), pred(1, 1, 1.0, [f, None]))
    assert ious == [1.0, None]


def test_temporal_overlap_five_of_fifteen():
    f = box(6, 6, 1, 4, 1, 4)
    gt_frames = [f if t < 10 else None for t in range(15)]
    pr_frames = [f if t >= 5 else None for t in range(15)]
    ov = temporal_overlap(gt(1, 1, 1, gt_frames), pred(1, 1, 1.0, pr_frames), thr_spat=0.1)
    assert ov.n_match == 5
    assert ov.temporal_union == 15
    assert ov.value == pytest.approx(1 / 3)


def test_temporal_overlap_disjoint_but_cotemporal():
    a = box(6, 6, 0, 2, 0, 2)
    b = box(6, 6, 4, 6, 4, 6)
    ov = temporal_overlap(gt(1, 1, 1, [a] * 4), pred(1, 1, 1.0, [b] * 4), thr_spat=0.1)
    assert (ov.n_match, ov.value) == (0, 0.0)


def test_spatial_threshold_is_strict():
    # frame IoU exactly 0.25 does not count at thr_spat=0.25
    a = box(4, 4, 0, 2, 0, 2)
    b = box(4, 4, 0, 1, 0, 1)
    g, p = gt(1, 1, 1, [a]), pred(1, 1, 1.0, [b])
    assert temporal_overlap(g, p, thr_spat=0.25).n_match == 0
    assert temporal_overlap(g, p, thr_spat=0.24).n_match == 1


def test_extent_union_counts_gap_frames():
    f = box(4, 4, 0, 2, 0, 2)
    g = gt(1, 1, 1, [f, None, f])
    p = pred(1, 1, 1.0, [f, None, f])
    assert temporal_overlap(g, p, 0.1, "frames").temporal_union == 2
    assert temporal_overlap(g, p, 0.1, "extent").temporal_union == 3


def test_sequence_iou_matches_voxel_count_on_random_tracks():
    rng = np.random.default_rng(5)
    for _ in range(50):
        T, h, w = int(rng.integers(1, 6)), 9, 7
        a = [None if rng.random() < 0.2 else rng.random((h, w)) < 0.4 for _ in range(T)]
        b = [None if rng.random() < 0.2 else rng.random((h, w)) < 0.4 for _ in range(T)]
        got = sequence_iou(gt(1, 1, 1, a), pred(1, 1, 1.0, b))
        assert got == pixel_seq_iou(a, b, h, w)


def test_trailing_empty_frames_do_not_change_iou():
    rng = np.random.default_rng(8)
    a = [rng.random((6, 6)) < 0.5 for _ in range(3)]
    b = [rng.random((6, 6)) < 0.5 for _ in range(3)]
    base = sequence_iou(gt(1, 1, 1, a), pred(1, 1, 1.0, b))
    padded = sequence_iou(gt(1, 1, 1, a + [None, None]), pred(1, 1, 1.0, b + [None, None]))
    assert base == padded


def test_growing_the_prediction_onto_gt_never_lowers_iou():
    g = box(8, 8, 2, 6, 2, 6)
    last = -1.0
    for x1 in range(3, 7):
        iou = sequence_iou(gt(1, 1, 1, [g]), pred(1, 1, 1.0, [box(8, 8, 2, 6, 2, x1)]))
        assert iou >= last
        last = iou


def test_compute_overlaps_same_for_any_thread_count():
    rng = np.random.default_rng(2)
    gts, preds = [], []
    for v in range(1, 5):
        for k in range(2):
            gts.append(gt(len(gts) + 1, v, 1 + k, [rng.random((5, 5)) < 0.5 for _ in range(3)]))
            preds.append(pred(v, 1, float(rng.random()), [rng.random((5, 5)) < 0.5 for _ in range(3)]))
    ds = dataset({v: (3, 5, 5) for v in range(1, 5)}, gts, preds)
    one = compute_overlaps(ds, threads=1)
    four = compute_overlaps(ds, threads=4)
    for vid in one:
        assert np.array_equal(one[vid].iou, four[vid].iou)

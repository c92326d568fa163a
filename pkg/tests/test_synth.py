import hashlib
import json

import numpy as np
import pytest

from visdiag.analysis import analyze
from visdiag.dataset import dump_predictions, gt_as_predictions
from visdiag.exceptions import PerturbError
from visdiag.overlap import sequence_iou, temporal_overlap
from visdiag.synth import PerturbSpec, perturb, synthetic_ground_truth


def digest(preds):
    return hashlib.sha256(json.dumps(dump_predictions(preds), sort_keys=True).encode()).hexdigest()


def test_empty_spec_replays_ground_truth():
    ds = synthetic_ground_truth(n_videos=4, seed=0)
    out = perturb(ds, PerturbSpec(seed=0))
    assert out.census == []
    assert [(p.video_id, p.category_id, p.masks) for p in out.predictions] == [
        (g.video_id, g.category_id, g.masks) for g in ds.gt_tracks
    ]


def test_miss_removes_predictions():
    ds = synthetic_ground_truth(n_videos=5, seed=1)
    out = perturb(ds, PerturbSpec(seed=1, counts={"Miss": 3}))
    assert len(out.predictions) == len(ds.gt_tracks) - 3


def test_identity_switch_looks_like_a_temporal_error():
    ds = synthetic_ground_truth(n_videos=1, length=20, tracks_per_video=(2, 2), seed=2)
    out = perturb(ds, PerturbSpec(seed=2, counts={"Temp": 1}))
    (hit,) = out.census
    g = next(t for t in ds.gt_tracks if t.id == hit["gt_id"])
    p = next(p for p in out.predictions if sequence_iou(g, p) < 1.0)
    assert 0.1 < sequence_iou(g, p) < 0.5
    assert temporal_overlap(g, p, 0.1).value < 0.7


def test_cls_and_bkg_census_matches_classifier():
    ds = synthetic_ground_truth(n_videos=6, seed=3)
    out = perturb(ds, PerturbSpec(seed=3, counts={"Cls": 2, "Bkg": 3}))
    counts = analyze(ds.with_predictions(out.predictions)).error_counts
    assert (counts["Cls"], counts["Bkg"]) == (2, 3)
    assert sum(counts.values()) == 5


def test_seeded_rerun_is_identical():
    ds = synthetic_ground_truth(n_videos=5, seed=4)
    spec = {"Cls": 1, "Spat": 1, "Temp": 1, "Dup": 1, "Bkg": 1, "Miss": 1}
    a = perturb(ds, PerturbSpec(seed=9, counts=spec))
    b = perturb(ds, PerturbSpec(seed=9, counts=spec))
    assert digest(a.predictions) == digest(b.predictions)
    assert a.census == b.census


def test_impossible_spec_is_reported():
    ds = synthetic_ground_truth(n_videos=1, tracks_per_video=(1, 1), seed=0)
    with pytest.raises(PerturbError):
        perturb(ds, PerturbSpec(counts={"Miss": 5}))
    with pytest.raises(PerturbError):
        perturb(ds, PerturbSpec(counts={"Temp": 1}))
    with pytest.raises(ValueError):
        PerturbSpec(counts={"Both": 1})


def test_interacting_mode_keeps_partition_totals():
    ds = synthetic_ground_truth(n_videos=6, seed=5, tracks_per_video=(2, 4))
    out = perturb(ds, PerturbSpec(seed=5, counts={"Cls": 3, "Dup": 3, "Bkg": 2}, interacting=True))
    a = analyze(ds.with_predictions(out.predictions))
    fps = [r for r in a.records if r.kind != "Miss"]
    assert len({r.pred for r in fps}) == len(fps)
    assert a.weights.fix_all_ap50 == pytest.approx(100.0, abs=1e-6)


def test_ground_truth_lanes_do_not_overlap():
    ds = synthetic_ground_truth(n_videos=3, tracks_per_video=(3, 3), seed=6)
    replay = gt_as_predictions(ds.gt_tracks)
    for g in ds.gt_tracks:
        for p in replay:
            if p.video_id == g.video_id and p.masks != g.masks:
                assert sequence_iou(g, p) == 0.0

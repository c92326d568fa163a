import json

import pytest

from visdiag.cli import main
from visdiag.dataset import (
    Dataset,
    dump_ground_truth,
    dump_predictions,
    gt_as_predictions,
    load,
    write_json,
)
from visdiag.config import EvalConfig
from visdiag.matching import evaluate
from visdiag.synth import synthetic_ground_truth
from visdiag.taxonomy import KINDS


@pytest.fixture
def gt_file(tmp_path):
    ds = synthetic_ground_truth(n_videos=8, seed=11, tracks_per_video=(2, 4))
    path = tmp_path / "gt.json"
    write_json(dump_ground_truth(ds), path)
    return path, ds


def run_synth(tmp_path, gt_path, counts, seed=5, name="synth"):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"seed": 0, "counts": counts}))
    out = tmp_path / name
    assert main(["synth", str(gt_path), str(spec), "--out", str(out), "--seed", str(seed)]) == 0
    return out


def test_gt_replay_reports_perfect_scores(tmp_path, gt_file, capsys):
    gt_path, ds = gt_file
    preds = tmp_path / "pred.json"
    write_json(dump_predictions(gt_as_predictions(ds.gt_tracks)), preds)
    out = tmp_path / "out"
    assert main(["evaluate", str(gt_path), str(preds), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "mAP 100.00" in printed
    summary = json.loads((out / "summary.json").read_text())
    assert summary["map"] == pytest.approx(100.0)
    assert all(v == 0.0 for v in summary["weights"].values())
    for name in ("weights.json", "ranges.json", "errors.jsonl", "summary.csv",
                 "error_weights.svg", "range_weights.svg", "manifest.json"):
        assert (out / name).exists()
    assert (out / "errors.jsonl").read_text() == ""


def test_missing_predictions_exit_2_without_outputs(tmp_path, gt_file, capsys):
    gt_path, _ = gt_file
    out = tmp_path / "out"
    code = main(["evaluate", str(gt_path), str(tmp_path / "missing.json"), "--out", str(out)])
    assert code == 2
    assert not out.exists()
    assert "no such file" in capsys.readouterr().err


def test_dimension_mismatch_exit_2(tmp_path, gt_file):
    gt_path, ds = gt_file
    raw = dump_predictions(gt_as_predictions(ds.gt_tracks))
    seg = next(s for s in raw[0]["segmentations"] if s is not None)
    seg["size"] = [seg["size"][0] + 1, seg["size"][1]]
    seg["counts"] = [seg["size"][0] * seg["size"][1]]
    preds = tmp_path / "pred.json"
    preds.write_text(json.dumps(raw))
    out = tmp_path / "out"
    assert main(["evaluate", str(gt_path), str(preds), "--out", str(out)]) == 2
    assert not out.exists()


def test_bad_flag_values_are_rejected(tmp_path, gt_file):
    gt_path, _ = gt_file
    with pytest.raises(SystemExit) as info:
        main(["evaluate", str(gt_path), str(gt_path), "--iou-sweep", "0.5"])
    assert info.value.code == 2
    assert main(["evaluate", str(gt_path), str(gt_path), "--thr-b", "0.6", "--out", str(tmp_path / "o")]) == 2


def test_synth_miss_and_rerun_digest(tmp_path, gt_file):
    gt_path, ds = gt_file
    a = run_synth(tmp_path, gt_path, {"Miss": 2}, name="a")
    b = run_synth(tmp_path, gt_path, {"Miss": 2}, name="b")
    assert (a / "predictions.json").read_bytes() == (b / "predictions.json").read_bytes()
    assert len(json.loads((a / "predictions.json").read_text())) == len(ds.gt_tracks) - 2
    assert json.loads((a / "census.json").read_text())["counts"]["Miss"] == 2


def fix_by_hand(ds, errors, kind):
    """Apply one kind of fix to the dataset itself, from errors.jsonl alone."""
    gts = {g.id: g for g in ds.gt_tracks}
    preds = {p.id: p for p in ds.predictions}
    drop_gt = set()
    for e in errors:
        if e["kind"] != kind:
            continue
        if kind == "Miss":
            drop_gt.add(e["gt_id"])
        elif kind in ("Dup", "Bkg", "Both"):
            del preds[e["pred_id"]]
        else:
            p, g = preds[e["pred_id"]], gts[e["gt_id"]]
            if kind == "Cls":
                preds[p.id] = type(p)(p.video_id, g.category_id, p.score, p.masks, id=p.id)
            else:
                preds[p.id] = type(p)(p.video_id, p.category_id, p.score, g.masks, id=p.id)
    return Dataset(
        ds.videos,
        ds.categories,
        tuple(g for g in ds.gt_tracks if g.id not in drop_gt),
        tuple(preds.values()),
    )


def test_weights_file_matches_double_evaluation(tmp_path, gt_file):
    gt_path, _ = gt_file
    counts = {"Cls": 2, "Spat": 2, "Temp": 1, "Dup": 2, "Bkg": 2, "Miss": 1}
    synth = run_synth(tmp_path, gt_path, counts)
    out = tmp_path / "out"
    pred_path = synth / "predictions.json"
    assert main(["evaluate", str(gt_path), str(pred_path), "--out", str(out), "--format", "json"]) == 0
    weights = json.loads((out / "weights.json").read_text())["weights"]
    errors = [json.loads(line) for line in (out / "errors.jsonl").read_text().splitlines()]
    ds = load(gt_path, pred_path)
    base = evaluate(ds, EvalConfig()).ap50
    for kind in KINDS:
        fixed = evaluate(fix_by_hand(ds, errors, kind), EvalConfig()).ap50
        assert weights[kind] == pytest.approx(fixed - base, abs=1e-9), kind
    assert not (out / "summary.csv").exists()


def test_threads_flag_gives_identical_bytes(tmp_path, gt_file):
    gt_path, _ = gt_file
    synth = run_synth(tmp_path, gt_path, {"Cls": 1, "Spat": 1, "Bkg": 1})
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"out{threads}"
        main(["evaluate", str(gt_path), str(synth / "predictions.json"), "--out", str(out),
              "--threads", threads, "--quiet"])
        outs.append(out)
    for name in ("summary.json", "weights.json", "ranges.json", "errors.jsonl", "summary.csv",
                 "error_weights.svg"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

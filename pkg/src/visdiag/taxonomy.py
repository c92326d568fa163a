"""Assign every false positive and missed GT to one error type.

False positives at the foreground threshold are tested in this order:

* ``Cls``  - overlaps a GT of another class at IoU >= thr_f
* ``Dup``  - overlaps a same-class GT at IoU >= thr_f that a higher-scored
  prediction already claimed
* ``Spat`` / ``Temp`` - best same-class IoU in [thr_b, thr_f); split by the
  temporal overlap with that GT (``>= thr_temp`` is Spat)
* ``Both`` - best other-class IoU in [thr_b, thr_f)
* ``Bkg``  - below thr_b against every GT

Unmatched GTs that no Cls/Spat/Temp error points at become ``Miss``.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .exceptions import TaxonomyError

KINDS = ("Cls", "Dup", "Spat", "Temp", "Both", "Bkg", "Miss")
LOC_KINDS = ("Spat", "Temp")
# GTs named by these errors would be claimed by their fix, so they are not missed
COVERING_KINDS = ("Cls", "Spat", "Temp")


@dataclass(frozen=True)
class ErrorRecord:
    kind: str
    video_id: object
    category_id: object
    pred: object = None
    score: object = None
    gt: object = None
    gt_index: object = None
    iou_max: float = 0.0
    overlap_temp: object = None

    def to_json(self, dataset=None):
        pred_id = self.pred
        if dataset is not None and self.pred is not None:
            pred_id = dataset.predictions[self.pred].id
        return {
            "kind": self.kind,
            "video_id": self.video_id,
            "category_id": self.category_id,
            "score": self.score,
            "iou_max": self.iou_max,
            "overlap_temp": self.overlap_temp,
            "gt_id": self.gt,
            "pred_id": pred_id,
        }


def _best(row, mask):
    if not mask.any():
        return -1, 0.0
    cand = np.flatnonzero(mask)
    j = int(cand[np.argmax(row[cand])])
    return j, float(row[j])


def classify_false_positive(v, match, r, config, gt_ids=None):
    """Classify row ``r`` of video view ``v`` given its matching at thr_f.

    ``gt_ids`` maps dataset GT indices to annotation ids for the record.
    """
    cat = v.pred_cat[r]
    row = v.iou[r]
    valid = ~v.gt_ignore
    same = valid & (v.gt_cat == cat)
    other = valid & (v.gt_cat != cat)
    g_same, iou_same = _best(row, same)
    g_other, iou_other = _best(row, other)
    claimed = _claimed(match)
    gt_idx = v.gt_idx

    def rec(kind, g, iou, ov=None):
        return ErrorRecord(
            kind=kind,
            video_id=v.video_id,
            category_id=cat,
            pred=int(v.pred_idx[r]),
            score=float(v.pred_score[r]),
            gt=None if g < 0 or gt_ids is None else gt_ids[int(gt_idx[g])],
            gt_index=None if g < 0 else int(gt_idx[g]),
            iou_max=iou,
            overlap_temp=ov,
        )

    if g_other >= 0 and iou_other >= config.thr_f:
        return rec("Cls", g_other, iou_other)
    if g_same >= 0 and iou_same >= config.thr_f:
        free = [j for j in np.flatnonzero(same & (row >= config.thr_f)) if j not in claimed]
        if free:
            raise TaxonomyError(
                f"prediction {int(v.pred_idx[r])} clears thr_f on a free GT but is unmatched"
            )
        return rec("Dup", g_same, iou_same)
    if g_same >= 0 and iou_same >= config.thr_b:
        ov = v.overlaps.overlap(
            v.pred_rows[r], v.gt_cols[g_same], config.thr_spat, config.temporal_union_mode
        )
        kind = "Spat" if ov.value >= config.thr_temp else "Temp"
        return rec(kind, g_same, iou_same, ov.value)
    if g_other >= 0 and iou_other >= config.thr_b:
        return rec("Both", g_other, iou_other)
    top = float(row[valid].max()) if valid.any() else 0.0
    if top > config.thr_b:
        raise TaxonomyError(
            f"prediction {int(v.pred_idx[r])} fits no error type (max IoU {top})"
        )
    return rec("Bkg", -1, top)


def _claimed(match):
    tp = (match.pred_to_gt >= 0) & ~match.pred_ignored
    return set(match.pred_to_gt[tp].tolist())


def false_positive_rows(v, match):
    """Rows of ``v`` that are scored, unmatched and not ignored."""
    return np.flatnonzero(match.evaluated & (match.pred_to_gt < 0) & ~match.pred_ignored)


def classify(view, result, config):
    """Error records for every false positive, then every missed GT.

    ``result`` must hold the per-video matching at ``config.thr_f``.
    Records are ordered by video, then by descending score.
    """
    gt_ids = [g.id for g in view.dataset.gt_tracks]
    fps = []
    for v in view.videos:
        match = result.matches[v.video_id]
        rows = false_positive_rows(v, match)
        rows = rows[np.argsort(-v.pred_score[rows], kind="mergesort")]
        for r in rows:
            fps.append(classify_false_positive(v, match, r, config, gt_ids))
    return fps + collect_missed(view, result, fps)


def collect_missed(view, result, errors):
    """Miss records for unmatched, uncovered, non-ignore GTs."""
    covered = {e.gt_index for e in errors if e.kind in COVERING_KINDS}
    out = []
    for v in view.videos:
        match = result.matches[v.video_id]
        claimed = _claimed(match)
        gidx = v.gt_idx
        for c in range(len(v.gt_cols)):
            if v.gt_ignore[c] or c in claimed or int(gidx[c]) in covered:
                continue
            same = match.evaluated & (v.pred_cat == v.gt_cat[c])
            iou = float(v.iou[same, c].max()) if same.any() else 0.0
            out.append(
                ErrorRecord(
                    kind="Miss",
                    video_id=v.video_id,
                    category_id=v.gt_cat[c],
                    gt=view.dataset.gt_tracks[int(gidx[c])].id,
                    gt_index=int(gidx[c]),
                    iou_max=iou,
                )
            )
    return out


def error_summary(records):
    """Count records per kind; every kind is present."""
    counts = Counter(r.kind for r in records)
    unknown = set(counts) - set(KINDS)
    if unknown:
        raise ValueError(f"unknown error kinds {sorted(unknown)}")
    return {k: counts.get(k, 0) for k in KINDS}

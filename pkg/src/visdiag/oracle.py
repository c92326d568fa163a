"""Error weights from oracle fixes.

Each error type is fixed on its own, starting from the original
predictions, and its weight is the resulting gain in AP at the foreground
threshold.  Fixing every type together must give a perfect score.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import OracleError
from .matching import evaluate_view
from .taxonomy import KINDS

FIX_ALL_ORDER = ("Cls", "Spat", "Temp", "Both", "Dup", "Bkg", "Miss")
NEG_TOL = 1e-9


@dataclass
class ErrorWeightReport:
    base_ap50: object
    weights: dict
    fix_all_ap50: object
    sweep: dict = field(default_factory=dict)

    def to_json(self):
        out = {
            "base_ap50": self.base_ap50,
            "weights": {k: self.weights[k] for k in KINDS},
            "fix_all_ap50": self.fix_all_ap50,
        }
        if self.sweep:
            out["sweep"] = {f"{t:.2f}": {k: w[k] for k in KINDS} for t, w in self.sweep.items()}
        return out


def _base_claims(view, base):
    """Dataset GT indices claimed by true positives in the base matching."""
    claimed = set()
    for v in view.videos:
        m = base.matches[v.video_id]
        tp = (m.pred_to_gt >= 0) & ~m.pred_ignored
        claimed.update(int(i) for i in v.gt_idx[m.pred_to_gt[tp]])
    return claimed


def apply_fixes(view, base, records, kinds):
    """View with the errors of ``kinds`` corrected, applied in the given order.

    Cls: relabel to the named GT's class; Spat/Temp: treat the named GT as
    perfectly localized (IoU 1.0).  Either way, if that GT is already claimed
    the prediction is dropped instead.  Both, Dup and Bkg predictions are
    dropped; Miss GTs are removed.  ``view`` itself is never modified.
    """
    claimed = _base_claims(view, base)
    drop = set()
    relabel = {}
    snap = {}
    remove_gt = set()
    gt_cat = {}
    for v in view.videos:
        for c, gi in enumerate(v.gt_idx):
            gt_cat[int(gi)] = v.gt_cat[c]

    for kind in kinds:
        for rec in records:
            if rec.kind != kind:
                continue
            if kind == "Miss":
                remove_gt.add(rec.gt_index)
            elif kind in ("Cls", "Spat", "Temp"):
                if rec.gt_index in claimed:
                    drop.add(rec.pred)
                    continue
                claimed.add(rec.gt_index)
                if kind == "Cls":
                    relabel[rec.pred] = gt_cat[rec.gt_index]
                else:
                    snap[rec.pred] = rec.gt_index
            else:
                drop.add(rec.pred)

    if not (drop or relabel or snap or remove_gt):
        return view
    videos = []
    for v in view.videos:
        pidx = v.pred_idx
        gidx = v.gt_idx
        touched = (
            any(int(p) in drop or int(p) in relabel or int(p) in snap for p in pidx)
            or any(int(g) in remove_gt for g in gidx)
        )
        if not touched:
            videos.append(v)
            continue
        pred_cat = v.pred_cat.copy()
        iou = v.iou.copy()
        col_of = {int(g): c for c, g in enumerate(gidx)}
        for r, p in enumerate(pidx):
            p = int(p)
            if p in relabel:
                pred_cat[r] = relabel[p]
            if p in snap:
                iou[r, col_of[snap[p]]] = 1.0
        keep_p = np.array([int(p) not in drop for p in pidx], dtype=bool)
        keep_g = np.array([int(g) not in remove_gt for g in gidx], dtype=bool)
        fixed = replace(v, pred_cat=pred_cat, iou=iou)
        videos.append(fixed.subset(keep_p, keep_g))
    return view.replace_videos(videos)


def apply_fix(view, base, records, kind):
    return apply_fixes(view, base, records, (kind,))


def ap_at(view, thr, max_dets):
    res = evaluate_view(view, (thr,), max_dets, with_ap50=False)
    return res.mAP


def error_weight(view, base, records, kind, config, base_ap=None):
    """AP gain at thr_f from fixing only ``kind``; negative gains are an error."""
    if base_ap is None:
        base_ap = ap_at(view, config.thr_f, config.max_dets)
    fixed = ap_at(apply_fix(view, base, records, kind), config.thr_f, config.max_dets)
    return _delta(fixed, base_ap, kind)


def _delta(fixed, base_ap, kind):
    if base_ap is None or fixed is None:
        return 0.0 if fixed == base_ap else None
    d = fixed - base_ap
    if d < -NEG_TOL:
        raise OracleError(f"fixing {kind} lowered AP by {-d:.6g}")
    return max(d, 0.0)


def fix_all(view, base, records, config):
    """AP at thr_f after applying every fix cumulatively (None without GT)."""
    return ap_at(apply_fixes(view, base, records, FIX_ALL_ORDER), config.thr_f, config.max_dets)


def compute_weights(view, base, records, config, threads=1):
    """Weight of every error kind plus the fix-everything score."""
    thr = config.thr_f
    base_ap = ap_at(view, thr, config.max_dets)

    def one(kind):
        return error_weight(view, base, records, kind, config, base_ap)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, KINDS))
    else:
        values = [one(k) for k in KINDS]
    weights = dict(zip(KINDS, values))

    # fixes chosen at thr_f can hurt at other thresholds, so no sign check here
    sweep = {}
    for t in config.weight_thresholds:
        b = ap_at(view, t, config.max_dets)
        sweep[t] = {}
        for k in KINDS:
            f = ap_at(apply_fix(view, base, records, k), t, config.max_dets)
            sweep[t][k] = None if f is None or b is None else f - b
    return ErrorWeightReport(base_ap, weights, fix_all(view, base, records, config), sweep)

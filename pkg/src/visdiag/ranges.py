"""Metrics and error weights restricted to instance temporal-length bins.

Inside a bin, GTs of other lengths become ignore regions and predictions of
other lengths only count when they match an in-bin GT, the way COCO treats
object area ranges.
"""

from dataclasses import dataclass, field

from .config import EvalConfig, bin_of, in_bin
from .matching import build_view, evaluate_view
from .oracle import compute_weights
from .overlap import compute_overlaps
from .taxonomy import classify, error_summary

ASSUMPTIONS = (
    "bin edges belong to the upper bin",
    "out-of-bin predictions count only when matched to an in-bin GT",
    "zero-length predictions are binned with length 1",
)


@dataclass
class RangeResult:
    label: str
    lo: int
    hi: object
    n_gt: int
    n_pred: int
    map: object = None
    ap50: object = None
    weights: object = None
    fix_all_ap50: object = None
    base_ap50: object = None
    errors: dict = field(default_factory=dict)
    per_category: dict = field(default_factory=dict)

    @property
    def applicable(self):
        return self.n_gt > 0

    def to_json(self):
        return {
            "label": self.label,
            "lo": self.lo,
            "hi": self.hi,
            "n_gt": self.n_gt,
            "n_pred": self.n_pred,
            "map": self.map,
            "ap50": self.ap50,
            "base_ap50": self.base_ap50,
            "weights": self.weights,
            "fix_all_ap50": self.fix_all_ap50,
            "errors": self.errors,
        }


@dataclass
class RangeMetrics:
    bins: list
    global_: dict

    def to_json(self):
        return {
            "bins": [b.to_json() for b in self.bins],
            "global": self.global_,
            "assumptions": list(ASSUMPTIONS),
        }

    def by_label(self):
        return {b.label: b for b in self.bins}


def count_in_range(dataset, lo, hi, mode="visible"):
    n_gt = sum(1 for g in dataset.gt_tracks if not g.iscrowd and in_bin(g.length(mode), lo, hi))
    n_pred = sum(1 for p in dataset.predictions if in_bin(max(p.length(mode), 1), lo, hi))
    return n_gt, n_pred


def gt_bin_counts(dataset, bins, mode="visible"):
    """Number of non-crowd GT instances per bin label."""
    counts = {label: 0 for label, _, _ in bins}
    for g in dataset.gt_tracks:
        if not g.iscrowd:
            counts[bin_of(g.length(mode), bins)] += 1
    return counts


def evaluate_range(dataset, lo, hi, config=None, overlaps=None, label=None, threads=1):
    """mAP and error weights of one temporal range; not applicable without GT."""
    config = config or EvalConfig()
    if overlaps is None:
        overlaps = compute_overlaps(dataset, threads)
    n_gt, n_pred = count_in_range(dataset, lo, hi, config.temporal_length_mode)
    out = RangeResult(label or f"[{lo},{'inf' if hi is None else hi})", lo, hi, n_gt, n_pred)
    if not n_gt:
        return out
    view = build_view(dataset, overlaps, config, length_range=(lo, hi))
    res = evaluate_view(view, config.iou_thresholds, config.max_dets, match_threshold=config.thr_f)
    records = classify(view, res, config)
    weights = compute_weights(view, res, records, config, threads)
    out.map = res.mAP
    out.ap50 = res.ap50
    out.weights = weights.weights
    out.base_ap50 = weights.base_ap50
    out.fix_all_ap50 = weights.fix_all_ap50
    out.errors = error_summary(records)
    out.per_category = res.per_category()
    return out


def range_report(dataset, config=None, overlaps=None, global_=None, threads=1):
    """Per-bin results plus the unfiltered metrics."""
    config = config or EvalConfig()
    if overlaps is None:
        overlaps = compute_overlaps(dataset, threads)
    bins = [
        evaluate_range(dataset, lo, hi, config, overlaps, label, threads)
        for label, lo, hi in config.range_bins
    ]
    if global_ is None:
        view = build_view(dataset, overlaps, config)
        res = evaluate_view(view, config.iou_thresholds, config.max_dets, match_threshold=config.thr_f)
        records = classify(view, res, config)
        w = compute_weights(view, res, records, config, threads)
        global_ = {
            "map": res.mAP,
            "ap50": res.ap50,
            "n_gt": sum(1 for g in dataset.gt_tracks if not g.iscrowd),
            "n_pred": len(dataset.predictions),
            "base_ap50": w.base_ap50,
            "weights": w.weights,
            "fix_all_ap50": w.fix_all_ap50,
            "errors": error_summary(records),
        }
    return RangeMetrics(bins, global_)

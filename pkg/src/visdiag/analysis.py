"""End-to-end analysis: evaluation, error taxonomy, oracle weights, ranges."""

import time
from dataclasses import dataclass, field

from .config import EvalConfig
from .matching import build_view, evaluate_view
from .oracle import compute_weights
from .overlap import compute_overlaps
from .ranges import range_report
from .taxonomy import classify, error_summary


@dataclass
class Analysis:
    dataset: object
    config: EvalConfig
    result: object
    records: list
    weights: object
    ranges: object
    timings: dict = field(default_factory=dict)

    @property
    def error_counts(self):
        return error_summary(self.records)


def analyze(dataset, config=None, threads=1):
    config = config or EvalConfig()
    timings = {}
    t0 = time.perf_counter()
    overlaps = compute_overlaps(dataset, threads)
    timings["overlaps"] = time.perf_counter() - t0

    t = time.perf_counter()
    view = build_view(dataset, overlaps, config)
    result = evaluate_view(
        view, config.iou_thresholds, config.max_dets, match_threshold=config.thr_f, records=True
    )
    timings["evaluate"] = time.perf_counter() - t

    t = time.perf_counter()
    records = classify(view, result, config)
    weights = compute_weights(view, result, records, config, threads)
    timings["weights"] = time.perf_counter() - t

    t = time.perf_counter()
    global_ = {
        "map": result.mAP,
        "ap50": result.ap50,
        "n_gt": sum(1 for g in dataset.gt_tracks if not g.iscrowd),
        "n_pred": len(dataset.predictions),
        "base_ap50": weights.base_ap50,
        "weights": weights.weights,
        "fix_all_ap50": weights.fix_all_ap50,
        "errors": error_summary(records),
    }
    ranges = range_report(dataset, config, overlaps, global_=global_, threads=threads)
    timings["ranges"] = time.perf_counter() - t
    timings["total"] = time.perf_counter() - t0
    return Analysis(dataset, config, result, records, weights, ranges, timings)

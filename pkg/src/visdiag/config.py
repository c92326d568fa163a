"""Evaluation thresholds and temporal bins."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import LENGTH_MODES

UNION_MODES = ("frames", "extent")


def iou_sweep(lo=0.5, step=0.05, hi=0.95):
    n = int(round((hi - lo) / step)) + 1
    return tuple(float(round(x, 10)) for x in np.linspace(lo, hi, n))


@dataclass(frozen=True)
class RangeBins:
    """Half-open temporal length bins ``[edges[i], edges[i+1])``; the last is open."""

    edges: tuple = (1, 16, 32)
    labels: tuple = ("short", "medium", "long")

    def __post_init__(self):
        edges = tuple(int(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if not edges or edges[0] != 1:
            raise ValueError("temporal bins must start at 1")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError(f"bin edges must be strictly increasing: {edges}")
        labels = tuple(self.labels)
        if len(labels) != len(edges):
            labels = tuple(
                f"[{lo},{'inf' if hi is None else hi})" for lo, hi in self.intervals()
            )
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_edges(cls, edges):
        edges = [int(e) for e in edges]
        if not edges or edges[0] != 1:
            edges = [1] + edges
        if edges == [1, 16, 32]:
            return cls()
        return cls(tuple(edges), ())

    def intervals(self):
        his = list(self.edges[1:]) + [None]
        return list(zip(self.edges, his))

    def __iter__(self):
        for label, (lo, hi) in zip(self.labels, self.intervals()):
            yield label, lo, hi

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class EvalConfig:
    thr_f: float = 0.5
    thr_b: float = 0.1
    thr_spat: float = 0.1
    thr_temp: float = 0.7
    iou_thresholds: tuple = field(default_factory=iou_sweep)
    max_dets: tuple = (1, 10, 100)
    range_bins: RangeBins = field(default_factory=RangeBins)
    temporal_length_mode: str = "visible"
    temporal_union_mode: str = "frames"
    min_score: float = 0.0
    weight_thresholds: tuple = ()

    def __post_init__(self):
        if not 0 <= self.thr_b < self.thr_f <= 1:
            raise ValueError(f"need 0 <= thr_b < thr_f <= 1, got {self.thr_b}, {self.thr_f}")
        if not 0 <= self.thr_spat < 1:
            raise ValueError(f"need 0 <= thr_spat < 1, got {self.thr_spat}")
        if not 0 < self.thr_temp <= 1:
            raise ValueError(f"need 0 < thr_temp <= 1, got {self.thr_temp}")
        if not self.iou_thresholds or any(not 0 < t <= 1 for t in self.iou_thresholds):
            raise ValueError(f"bad IoU sweep {self.iou_thresholds}")
        dets = tuple(sorted({int(d) for d in self.max_dets}))
        if not dets or dets[0] < 1:
            raise ValueError(f"bad max_dets {self.max_dets}")
        object.__setattr__(self, "max_dets", dets)
        object.__setattr__(self, "iou_thresholds", tuple(float(t) for t in self.iou_thresholds))
        if self.temporal_length_mode not in LENGTH_MODES:
            raise ValueError(f"temporal_length_mode must be one of {LENGTH_MODES}")
        if self.temporal_union_mode not in UNION_MODES:
            raise ValueError(f"temporal_union_mode must be one of {UNION_MODES}")

    def snapshot(self):
        """JSON-ready dict of every setting."""
        d = asdict(self)
        d["range_bins"] = {"edges": list(self.range_bins.edges), "labels": list(self.range_bins.labels)}
        d["iou_thresholds"] = list(self.iou_thresholds)
        d["max_dets"] = list(self.max_dets)
        d["weight_thresholds"] = list(self.weight_thresholds)
        return d


def bin_of(length, bins):
    """Label of the bin holding ``length``; a value on an edge goes to the upper bin."""
    if length < 1:
        raise ValueError(f"temporal length must be >= 1, got {length}")
    label = None
    for name, lo, hi in bins:
        if length >= lo and (hi is None or length < hi):
            label = name
    return label


def in_bin(length, lo, hi):
    return length >= lo and (hi is None or length < hi)


def is_finite(x):
    return x is not None and math.isfinite(x)

"""Synthetic ground truth and seeded error injection.

``perturb`` turns ground truth into predictions carrying a known population of
each error type and returns the census of what it injected, so the classifier
and the weighting can be checked against a known answer.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from . import rle
from .config import EvalConfig
from .dataset import Dataset, InstanceTrack, TrackPrediction, VideoClip
from .exceptions import PerturbError
from .overlap import overlap_from_stats, seq_iou_from_stats

INJECTED_KINDS = ("Cls", "Spat", "Temp", "Dup", "Bkg", "Miss")


def column_mask(height, width, x0, x1, top, bottom):
    """Mask whose column ``x`` (for x0 <= x < x1) is foreground on rows ``[top, bottom)``.

    ``top``/``bottom`` are arrays of length ``x1 - x0``; built directly as runs.
    """
    top = np.clip(np.asarray(top, dtype=np.int64), 0, height)
    bottom = np.clip(np.asarray(bottom, dtype=np.int64), 0, height)
    cols = np.arange(x0, x1)
    ok = bottom > top
    cols, top, bottom = cols[ok], top[ok], bottom[ok]
    if cols.size == 0:
        return rle.empty(height, width)
    starts = cols * height + top
    ends = cols * height + bottom
    bounds = np.empty(2 * cols.size + 2, dtype=np.int64)
    bounds[0] = 0
    bounds[1:-1:2] = starts
    bounds[2:-1:2] = ends
    bounds[-1] = height * width
    return rle.RleMask(height, width, rle.canonicalize(np.diff(bounds)))


def ellipse_mask(height, width, cy, cx, ry, rx):
    x0 = max(int(np.floor(cx - rx)), 0)
    x1 = min(int(np.ceil(cx + rx)) + 1, width)
    xs = np.arange(x0, x1) + 0.5
    span = ry * np.sqrt(np.clip(1 - ((xs - cx) / rx) ** 2, 0, None))
    top = np.ceil(cy - span - 0.5).astype(np.int64)
    bottom = np.floor(cy + span - 0.5).astype(np.int64) + 1
    return column_mask(height, width, x0, x1, top, bottom)


def synthetic_ground_truth(
    n_videos=10,
    length=30,
    height=120,
    width=160,
    tracks_per_video=(1, 4),
    n_categories=3,
    lengths=None,
    seed=0,
):
    """Videos of moving ellipses, one per vertical lane, so GTs never overlap.

    ``lengths`` optionally fixes the visible length of every track in order;
    otherwise extents are drawn at random.  Returns a :class:`Dataset`.
    """
    rng = np.random.default_rng(seed)
    videos = {}
    tracks = []
    pending = list(lengths) if lengths is not None else None
    ann_id = 1
    vid = 1
    while (pending is None and vid <= n_videos) or (pending and vid <= 10**9):
        lo, hi = tracks_per_video
        n_tr = int(rng.integers(lo, hi + 1))
        if pending is not None:
            n_tr = min(n_tr, len(pending))
            own = pending[:n_tr]
            del pending[:n_tr]
            T = max(length, max(own))
        else:
            own = None
            T = length
        videos[vid] = VideoClip(vid, T, height, width, tuple(f"{vid:05d}/{t:05d}.jpg" for t in range(T)))
        lane_w = width / n_tr
        for k in range(n_tr):
            if own is not None:
                n_vis = int(own[k])
            else:
                n_vis = int(rng.integers(max(1, T // 4), T + 1))
            start = int(rng.integers(0, T - n_vis + 1))
            cx0 = lane_w * (k + 0.5)
            rx = lane_w * float(rng.uniform(0.25, 0.4))
            ry = height * float(rng.uniform(0.15, 0.3))
            cy0 = float(rng.uniform(ry + 1, height - ry - 1))
            drift = float(rng.uniform(-0.4, 0.4))
            masks = [None] * T
            for t in range(start, start + n_vis):
                cy = np.clip(cy0 + drift * (t - start), ry + 1, height - ry - 1)
                masks[t] = ellipse_mask(height, width, cy, cx0, ry, rx)
            cat = int(rng.integers(1, n_categories + 1))
            tracks.append(InstanceTrack(ann_id, vid, cat, tuple(masks)))
            ann_id += 1
        vid += 1
    cats = {c: f"class_{c}" for c in range(1, n_categories + 1)}
    return Dataset(videos, cats, tuple(tracks))


@dataclass
class PerturbSpec:
    seed: int = 0
    counts: dict = field(default_factory=dict)
    max_erosion: int = 64
    switch_frame: object = None
    tp_score_range: tuple = (0.5, 1.0)
    fp_score_range: tuple = (0.05, 0.5)
    interacting: bool = False

    def __post_init__(self):
        bad = [k for k in self.counts if k not in INJECTED_KINDS]
        if bad:
            raise ValueError(f"cannot inject {bad}; choose from {INJECTED_KINDS}")
        if any(int(v) < 0 for v in self.counts.values()):
            raise ValueError("injection counts must be >= 0")
        self.counts = {k: int(v) for k, v in self.counts.items() if int(v)}

    @classmethod
    def from_json(cls, obj):
        known = {k: obj[k] for k in asdict(cls()) if k in obj}
        for key in ("tp_score_range", "fp_score_range"):
            if key in known:
                known[key] = tuple(known[key])
        return cls(**known)


@dataclass
class PerturbResult:
    predictions: tuple
    census: list

    def counts(self):
        out = {k: 0 for k in INJECTED_KINDS}
        for c in self.census:
            out[c["kind"]] += 1
        return out

    def census_json(self):
        return {"counts": self.counts(), "injections": self.census}


def _decode_or_zero(m, h, w):
    return np.zeros((h, w), bool) if m is None else rle.decode(m)


def _chessboard_depth(mask):
    """Per-pixel count of 3x3 erosions survived, on the mask's bounding box.

    Returns ``(depth, box, shape)`` or None for an empty mask.  Pixels
    outside the image count as background.
    """
    if mask is None or mask.area == 0:
        return None
    grid = rle.decode(mask)
    rows = np.flatnonzero(grid.any(axis=1))
    cols = np.flatnonzero(grid.any(axis=0))
    box = (rows[0], rows[-1] + 1, cols[0], cols[-1] + 1)
    y0, y1, x0, x1 = box
    crop = np.pad(grid[y0:y1, x0:x1], 1)
    depth = ndimage.distance_transform_cdt(crop, metric="chessboard")[1:-1, 1:-1]
    return depth, box, grid.shape


def _from_depth(d, steps):
    depth, (y0, y1, x0, x1), shape = d
    out = np.zeros(shape, bool)
    out[y0:y1, x0:x1] = depth > steps
    return rle.encode(out)


def _erode(mask, steps):
    """Erode ``mask`` by ``steps`` 3x3 iterations."""
    d = _chessboard_depth(mask)
    return mask if d is None else _from_depth(d, steps)


def _seq_stats(a, b):
    inter, union = rle.frame_stats(list(a), list(b))
    return inter, union


def _nonempty(masks):
    return np.array([m is not None and m.area > 0 for m in masks], dtype=bool)


def _spat_masks(gt, config, max_erosion):
    """Erode uniformly until the sequence IoU falls inside (thr_b, thr_f)."""
    depths = [_chessboard_depth(m) for m in gt.masks]
    gt_ne = _nonempty(gt.masks)
    # surviving[t, k] = pixels of frame t left after k erosions
    surviving = np.zeros((len(depths), max_erosion + 1), np.int64)
    for t, d in enumerate(depths):
        if d is not None:
            hist = np.bincount(d[0].ravel(), minlength=max_erosion + 2)
            surv = hist[::-1].cumsum()[::-1]
            surviving[t] = surv[1 : max_erosion + 2]
    union = surviving[:, 0]
    for steps in range(1, max_erosion + 1):
        inter = surviving[:, steps]
        iou = seq_iou_from_stats(inter, union)
        if iou >= config.thr_f:
            continue
        if iou <= config.thr_b:
            return None
        ov = overlap_from_stats(
            inter, union, gt_ne, inter > 0, config.thr_spat, config.temporal_union_mode,
        )
        if ov.value < config.thr_temp:
            return None
        return tuple(m if d is None else _from_depth(d, steps) for m, d in zip(gt.masks, depths))
    return None


def _temp_masks(gt, partner, config, switch_frame=None):
    """Splice ``gt`` before the switch frame with ``partner`` after it."""
    vis = np.flatnonzero(_nonempty(gt.masks))
    if switch_frame is not None:
        candidates = [int(switch_frame)]
    else:
        candidates = list(range(int(vis[-1]), int(vis[0]), -1))
    for s in candidates:
        masks = tuple(gt.masks[:s]) + tuple(partner.masks[s:])
        inter, union = _seq_stats(gt.masks, masks)
        iou = seq_iou_from_stats(inter, union)
        if not config.thr_b < iou < config.thr_f:
            continue
        pi, pu = _seq_stats(partner.masks, masks)
        if seq_iou_from_stats(pi, pu) >= iou:
            continue
        ov = overlap_from_stats(
            inter, union, _nonempty(gt.masks), _nonempty(masks),
            config.thr_spat, config.temporal_union_mode,
        )
        if ov.value < config.thr_temp:
            return masks
    return None


def _free_blob(occupied, rng, size):
    """Top-left corner of a ``size`` square that avoids ``occupied`` entirely."""
    h, w = occupied.shape
    if size > h or size > w:
        return None
    integral = np.pad(occupied.astype(np.int64).cumsum(0).cumsum(1), ((1, 0), (1, 0)))
    window = (
        integral[size:, size:] - integral[:-size, size:] - integral[size:, :-size] + integral[:-size, :-size]
    )
    ys, xs = np.nonzero(window == 0)
    if ys.size == 0:
        return None
    i = int(rng.integers(ys.size))
    return int(ys[i]), int(xs[i])


def _bkg_masks(video, gts, rng):
    occupied = np.zeros((video.height, video.width), bool)
    for g in gts:
        for m in g.masks:
            if m is not None and m.area:
                occupied |= rle.decode(m)
    size = max(2, min(video.height, video.width) // 8)
    corner = None
    while corner is None and size >= 1:
        corner = _free_blob(occupied, rng, size)
        if corner is None:
            size //= 2
    if corner is None:
        raise PerturbError(f"video {video.id}: no background region free of ground truth")
    y, x = corner
    grid = np.zeros_like(occupied)
    grid[y : y + size, x : x + size] = True
    blob = rle.encode(grid)
    T = video.length
    n = int(rng.integers(1, T + 1))
    start = int(rng.integers(0, T - n + 1))
    return tuple(blob if start <= t < start + n else None for t in range(T))


def perturb(dataset, spec, config=None):
    """Predictions for ``dataset``'s GT with the injections described by ``spec``.

    Untouched GTs are replayed as true positives.  In the default
    non-interacting mode each GT receives at most one injection (Bkg blobs
    are free-standing), and the returned census is exactly what a correct
    classifier should report.
    """
    config = config or EvalConfig()
    rng = np.random.default_rng(spec.seed)
    gts = [g for g in dataset.gt_tracks if not g.iscrowd]
    by_video = {}
    for g in gts:
        by_video.setdefault(g.video_id, []).append(g)
    cats = sorted(dataset.categories)

    def tp_score():
        return float(rng.uniform(*spec.tp_score_range))

    def fp_score():
        return float(rng.uniform(*spec.fp_score_range))

    order = [gts[i] for i in rng.permutation(len(gts))]
    assigned = {}
    used = set()
    for kind in ("Temp", "Cls", "Spat", "Dup", "Miss"):
        need = spec.counts.get(kind, 0)
        pool = order if not spec.interacting else [order[i] for i in rng.permutation(len(order))]
        for g in pool:
            if need == 0:
                break
            if not spec.interacting and g.id in used:
                continue
            if kind == "Cls" and len(cats) < 2:
                raise PerturbError("Cls injection needs at least two categories")
            payload = None
            if kind == "Temp":
                partners = [p for p in by_video[g.video_id] if p.id != g.id]
                for p in partners:
                    payload = _temp_masks(g, p, config, spec.switch_frame)
                    if payload is not None:
                        break
                if payload is None:
                    continue
            elif kind == "Spat":
                payload = _spat_masks(g, config, spec.max_erosion)
                if payload is None:
                    continue
            assigned.setdefault(g.id, []).append((kind, payload))
            used.add(g.id)
            need -= 1
        if need:
            raise PerturbError(
                f"could not place {need} more {kind} injection(s): no eligible ground truth "
                "(Spat needs masks large enough to erode into the IoU band, Temp a partner track)"
            )

    preds = []
    census = []
    bkg_videos = {}
    vids = sorted(by_video)
    for _ in range(spec.counts.get("Bkg", 0)):
        if not vids:
            raise PerturbError("Bkg injection needs at least one video")
        v = vids[int(rng.integers(len(vids)))]
        bkg_videos[v] = bkg_videos.get(v, 0) + 1

    def emit(g, cat, score, masks):
        preds.append(TrackPrediction(g.video_id, cat, score, tuple(masks), id=len(preds)))

    for vid in sorted(dataset.videos):
        for g in by_video.get(vid, []):
            primary = {"cat": g.category_id, "masks": g.masks, "score": tp_score(), "alive": True}
            extra = []
            for kind, payload in assigned.get(g.id, []):
                if kind == "Cls":
                    others = [c for c in cats if c != primary["cat"]]
                    primary["cat"] = others[int(rng.integers(len(others)))]
                elif kind in ("Spat", "Temp"):
                    primary["masks"] = payload
                elif kind == "Dup":
                    extra.append((primary["cat"], min(fp_score(), primary["score"] * 0.99)))
                elif kind == "Miss":
                    primary["alive"] = False
                census.append({"kind": kind, "video_id": vid, "gt_id": g.id})
            if primary["alive"]:
                emit(g, primary["cat"], primary["score"], primary["masks"])
            for cat, score in extra:
                emit(g, cat, score, primary["masks"] if primary["alive"] else g.masks)
        for _ in range(bkg_videos.get(vid, 0)):
            video = dataset.videos[vid]
            masks = _bkg_masks(video, by_video.get(vid, []), rng)
            cat = cats[int(rng.integers(len(cats)))]
            preds.append(TrackPrediction(vid, cat, fp_score(), masks, id=len(preds)))
            census.append({"kind": "Bkg", "video_id": vid, "gt_id": None})
    return PerturbResult(tuple(preds), census)


def dumps_census(result):
    return json.dumps(result.census_json(), sort_keys=True, indent=1)

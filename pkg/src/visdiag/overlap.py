"""Localization measurements between mask sequences.

Sequence IoU sums per-frame intersections and unions over the whole clip.
Temporal overlap counts frames whose own IoU clears a small spatial threshold
and divides by the temporal union of the two tracks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rle
from .exceptions import DimensionMismatchError


@dataclass(frozen=True)
class TemporalOverlap:
    value: float
    n_match: int
    temporal_union: int


def _check_pair(gt, pred):
    if gt.video_id != pred.video_id:
        raise DimensionMismatchError(
            f"tracks belong to different videos ({gt.video_id} vs {pred.video_id})"
        )
    if len(gt.masks) != len(pred.masks):
        raise DimensionMismatchError(
            f"tracks have different lengths ({len(gt.masks)} vs {len(pred.masks)})"
        )


def _stats(gt, pred):
    _check_pair(gt, pred)
    return rle.frame_stats(list(gt.masks), list(pred.masks))


def seq_iou_from_stats(inter, union):
    u = int(union.sum())
    return int(inter.sum()) / u if u > 0 else 0.0


def sequence_iou(gt, pred):
    """IoU of two mask sequences over all frames jointly, in [0, 1]."""
    inter, union = _stats(gt, pred)
    return seq_iou_from_stats(inter, union)


def frame_ious(gt, pred):
    """Per-frame IoU list; ``None`` where both frames are empty."""
    inter, union = _stats(gt, pred)
    return [None if u == 0 else int(i) / int(u) for i, u in zip(inter, union)]


def _span(flags):
    idx = np.flatnonzero(flags)
    out = np.zeros(len(flags), dtype=bool)
    if idx.size:
        out[idx[0] : idx[-1] + 1] = True
    return out


def overlap_from_stats(inter, union, gt_nonempty, pred_nonempty, thr_spat, union_mode="frames"):
    """Temporal overlap from per-frame areas and non-empty flags.

    ``union_mode="frames"`` takes the union of non-empty frame sets;
    ``"extent"`` takes the union of the first-to-last index ranges.
    """
    defined = union > 0
    ratio = np.zeros(len(union), dtype=np.float64)
    np.divide(inter, union, out=ratio, where=defined)
    n_match = int(np.count_nonzero(defined & (ratio > thr_spat)))
    gt_nonempty = np.asarray(gt_nonempty, dtype=bool)
    pred_nonempty = np.asarray(pred_nonempty, dtype=bool)
    if union_mode == "extent":
        span = _span(gt_nonempty) | _span(pred_nonempty)
    else:
        span = gt_nonempty | pred_nonempty
    t_union = int(np.count_nonzero(span))
    value = n_match / t_union if t_union else 0.0
    return TemporalOverlap(value, n_match, t_union)


def temporal_overlap(gt, pred, thr_spat=0.1, union_mode="frames"):
    """Fraction of the tracks' temporal union with frame IoU strictly above ``thr_spat``."""
    if not 0 <= thr_spat < 1:
        raise ValueError(f"thr_spat must be in [0, 1), got {thr_spat}")
    inter, union = _stats(gt, pred)
    return overlap_from_stats(inter, union, gt.nonempty, pred.nonempty, thr_spat, union_mode)


@dataclass
class VideoOverlaps:
    """Per-frame areas for every (prediction, GT) pair in one video.

    ``inter`` and ``union`` have shape ``(n_pred, n_gt, length)``; row and
    column order follow ``pred_idx`` and ``gt_idx`` (dataset indices).
    """

    video_id: int
    pred_idx: np.ndarray
    gt_idx: np.ndarray
    inter: np.ndarray
    union: np.ndarray
    pred_nonempty: np.ndarray
    gt_nonempty: np.ndarray
    iou: np.ndarray

    def overlap(self, p, g, thr_spat, union_mode="frames"):
        return overlap_from_stats(
            self.inter[p, g], self.union[p, g],
            self.gt_nonempty[g], self.pred_nonempty[p], thr_spat, union_mode,
        )


def video_overlaps(video, gts, preds, gt_idx, pred_idx):
    n_p, n_g, n_t = len(preds), len(gts), video.length
    inter = np.zeros((n_p, n_g, n_t), dtype=np.int64)
    union = np.zeros((n_p, n_g, n_t), dtype=np.int64)
    gt_frames = [list(g.masks) for g in gts]
    for p, pred in enumerate(preds):
        pf = list(pred.masks)
        for g, gf in enumerate(gt_frames):
            inter[p, g], union[p, g] = rle.frame_stats(gf, pf)
    tot_u = union.sum(axis=2)
    iou = np.zeros((n_p, n_g), dtype=np.float64)
    np.divide(inter.sum(axis=2), tot_u, out=iou, where=tot_u > 0)
    return VideoOverlaps(
        video.id,
        np.asarray(pred_idx, dtype=np.int64),
        np.asarray(gt_idx, dtype=np.int64),
        inter,
        union,
        np.array([p.nonempty for p in preds], dtype=bool).reshape(n_p, n_t),
        np.array([g.nonempty for g in gts], dtype=bool).reshape(n_g, n_t),
        iou,
    )


def compute_overlaps(dataset, threads=1):
    """Overlap tables for every video, keyed by video id.

    Work is split by video; the result does not depend on ``threads``.
    """
    gt_map = dataset.gt_by_video()
    pred_map = dataset.pred_by_video()
    vids = sorted(dataset.videos, key=_sort_key)

    def one(vid):
        gi, pi = gt_map[vid], pred_map[vid]
        return video_overlaps(
            dataset.videos[vid],
            [dataset.gt_tracks[i] for i in gi],
            [dataset.predictions[i] for i in pi],
            gi,
            pi,
        )

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, vids))
    else:
        results = [one(v) for v in vids]
    return dict(zip(vids, results))


def _sort_key(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))

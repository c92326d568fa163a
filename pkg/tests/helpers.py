"""Small builders shared by the tests: tracks from boolean grids."""

import numpy as np

from visdiag import rle
from visdiag.dataset import Dataset, InstanceTrack, TrackPrediction, VideoClip


def box(h, w, y0, y1, x0, x1):
    g = np.zeros((h, w), bool)
    g[y0:y1, x0:x1] = True
    return g


def masks_of(frames):
    """Grids (or None for an absent frame) to RLE masks."""
    return tuple(None if f is None else rle.encode(f) for f in frames)


def gt(id, video_id, category_id, frames, iscrowd=False):
    return InstanceTrack(id, video_id, category_id, masks_of(frames), iscrowd)


def pred(video_id, category_id, score, frames, id=-1):
    return TrackPrediction(video_id, category_id, score, masks_of(frames), id=id)


def dataset(video_shapes, gts, preds=(), categories=(1, 2, 3)):
    """``video_shapes`` maps video id to ``(T, H, W)``."""
    videos = {v: VideoClip(v, T, H, W) for v, (T, H, W) in video_shapes.items()}
    preds = tuple(
        p if p.id >= 0 else TrackPrediction(p.video_id, p.category_id, p.score, p.masks, id=i)
        for i, p in enumerate(preds)
    )
    return Dataset(videos, {c: f"c{c}" for c in categories}, tuple(gts), preds)


def binned_fixture(counts=(61, 237, 181), n_videos=214, T=40, seed=0):
    """GT-only dataset with ``counts`` instances visible for short/medium/long spans.

    Tracks sit in separate lanes of a small frame; lengths are drawn inside
    [1,16), [16,32) and [32,T].
    """
    rng = np.random.default_rng(seed)
    spans = [(1, 16), (16, 32), (32, T + 1)]
    lengths = np.concatenate(
        [rng.integers(lo, hi, n) for (lo, hi), n in zip(spans, counts)]
    )
    rng.shuffle(lengths)
    per_video = np.full(n_videos, len(lengths) // n_videos)
    per_video[: len(lengths) - per_video.sum()] += 1
    h, w = 6, 4 * int(per_video.max())
    tracks = []
    it = iter(lengths.tolist())
    for v, k in enumerate(per_video.tolist(), start=1):
        for lane in range(k):
            n = next(it)
            start = int(rng.integers(0, T - n + 1))
            f = box(h, w, 1, 5, 4 * lane, 4 * lane + 3)
            frames = [f if start <= t < start + n else None for t in range(T)]
            tracks.append(gt(len(tracks) + 1, v, 1 + len(tracks) % 2, frames))
    return dataset({v: (T, h, w) for v in range(1, n_videos + 1)}, tracks, categories=(1, 2))

"""Loading, validation and serialization of annotation and result files.

Ground truth follows the YouTube-VIS layout::

    {"videos": [{"id", "width", "height", "length", "file_names"}],
     "annotations": [{"id", "video_id", "category_id", "segmentations", "iscrowd"}],
     "categories": [{"id", "name"}]}

Results are a flat list of ``{"video_id", "category_id", "score",
"segmentations"}``.  Per-frame ``null`` segmentations become empty frames and
every track is padded to the full clip length.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import rle
from .exceptions import DatasetError, RleDecodeError

LENGTH_MODES = ("visible", "extent")


@dataclass(frozen=True)
class VideoClip:
    id: int
    length: int
    height: int
    width: int
    frame_names: tuple = ()


def _extent(masks):
    visible = [t for t, m in enumerate(masks) if m is not None and m.area > 0]
    if not visible:
        return None
    return visible[0], visible[-1]


class _TrackMixin:
    @property
    def nonempty(self):
        """Per-frame flags, True where the mask has at least one pixel."""
        return [m is not None and m.area > 0 for m in self.masks]

    @property
    def temporal_extent(self):
        """``(first, last)`` non-empty frame indices, or None for an empty track."""
        return _extent(self.masks)

    @property
    def temporal_length(self):
        """Number of frames with a non-empty mask."""
        return sum(self.nonempty)

    def length(self, mode="visible"):
        if mode == "visible":
            return self.temporal_length
        if mode == "extent":
            ext = self.temporal_extent
            return 0 if ext is None else ext[1] - ext[0] + 1
        raise ValueError(f"unknown temporal length mode {mode!r}")


@dataclass(frozen=True, eq=True)
class InstanceTrack(_TrackMixin):
    id: int
    video_id: int
    category_id: int
    masks: tuple
    iscrowd: bool = False


@dataclass(frozen=True, eq=True)
class TrackPrediction(_TrackMixin):
    video_id: int
    category_id: int
    score: float
    masks: tuple
    id: int = -1


@dataclass(frozen=True)
class Dataset:
    videos: dict
    categories: dict
    gt_tracks: tuple
    predictions: tuple = ()

    def with_predictions(self, predictions):
        return replace(self, predictions=tuple(predictions))

    def gt_by_video(self):
        out = {vid: [] for vid in self.videos}
        for i, g in enumerate(self.gt_tracks):
            out[g.video_id].append(i)
        return out

    def pred_by_video(self):
        out = {vid: [] for vid in self.videos}
        for i, p in enumerate(self.predictions):
            out[p.video_id].append(i)
        return out


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors

    def __str__(self):
        lines = [f"error: {e}" for e in self.errors]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) if lines else "no issues"


def _read_json(src):
    if isinstance(src, (str, Path)):
        path = Path(src)
        if not path.is_file():
            raise DatasetError(f"cannot read {path}: no such file")
        try:
            with path.open() as fh:
                return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path} is not valid JSON: {exc}") from None
    return src


def _parse_masks(segs, length, where):
    if not isinstance(segs, list):
        raise DatasetError("invalid track", [f"{where}: segmentations must be a list"])
    if len(segs) > length:
        raise DatasetError(
            "invalid track",
            [f"{where}: {len(segs)} segmentations for a {length}-frame video"],
        )
    masks = []
    for t, seg in enumerate(segs):
        if seg is None:
            masks.append(None)
            continue
        if not isinstance(seg, dict):
            raise DatasetError(
                "invalid track", [f"{where}: frame {t} is not an RLE object (polygons unsupported)"]
            )
        try:
            masks.append(rle.from_coco(seg, track=where))
        except RleDecodeError as exc:
            raise DatasetError("RLE decode failure", [f"{exc} at frame {t}"]) from None
    masks.extend([None] * (length - len(masks)))
    return tuple(masks)


def _parse_videos(raw):
    videos = {}
    issues = []
    for v in raw:
        try:
            vid = v["id"]
            names = tuple(v.get("file_names") or ())
            length = int(v.get("length") or len(names))
            clip = VideoClip(vid, length, int(v["height"]), int(v["width"]), names)
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(f"video {v.get('id') if isinstance(v, dict) else v!r}: bad entry ({exc})")
            continue
        if clip.length < 1:
            issues.append(f"video {vid}: length must be >= 1")
        if vid in videos:
            issues.append(f"video {vid}: duplicate id")
        videos[vid] = clip
    if issues:
        raise DatasetError("invalid videos", issues)
    return videos


def load_ground_truth(src):
    """Parse a ground-truth file (path or already-decoded dict).

    Returns ``(videos, categories, gt_tracks)``.
    """
    data = _read_json(src)
    if not isinstance(data, dict):
        raise DatasetError("ground truth must be a JSON object")
    missing = [k for k in ("videos", "annotations", "categories") if k not in data]
    if missing:
        raise DatasetError("ground truth is missing keys", [", ".join(missing)])
    videos = _parse_videos(data["videos"])
    try:
        categories = {c["id"]: str(c.get("name", c["id"])) for c in data["categories"]}
    except (KeyError, TypeError) as exc:
        raise DatasetError("invalid categories", [str(exc)]) from None

    tracks = []
    issues = []
    seen = set()
    for ann in data["annotations"]:
        aid = ann.get("id") if isinstance(ann, dict) else None
        where = f"annotation {aid}"
        try:
            vid = ann["video_id"]
            cat = ann["category_id"]
            segs = ann["segmentations"]
        except (KeyError, TypeError) as exc:
            issues.append(f"{where}: missing key {exc}")
            continue
        if aid is None:
            issues.append(f"{where}: missing id")
            continue
        if aid in seen:
            issues.append(f"{where}: duplicate id")
            continue
        seen.add(aid)
        if vid not in videos:
            issues.append(f"{where}: unknown video_id {vid}")
            continue
        if cat not in categories:
            issues.append(f"{where}: unknown category_id {cat}")
            continue
        try:
            masks = _parse_masks(segs, videos[vid].length, where)
        except DatasetError as exc:
            issues.extend(exc.issues)
            continue
        track = InstanceTrack(aid, vid, cat, masks, bool(ann.get("iscrowd", 0)))
        if track.temporal_length == 0:
            issues.append(f"{where}: every frame is empty")
            continue
        tracks.append(track)
    if issues:
        raise DatasetError("invalid ground truth", issues)
    return videos, categories, tuple(tracks)


def load_predictions(src, videos, categories=None):
    """Parse a results file against already-loaded videos.

    Prediction ids are assigned from file order.
    """
    data = _read_json(src)
    if not isinstance(data, list):
        raise DatasetError("predictions must be a JSON list")
    preds = []
    issues = []
    for i, entry in enumerate(data):
        where = f"prediction {i}"
        try:
            vid = entry["video_id"]
            cat = entry["category_id"]
            score = float(entry["score"])
            segs = entry["segmentations"]
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(f"{where}: missing or bad key {exc}")
            continue
        if vid not in videos:
            issues.append(f"{where}: unknown video_id {vid}")
            continue
        if categories is not None and cat not in categories:
            issues.append(f"{where}: unknown category_id {cat}")
            continue
        if not 0.0 <= score <= 1.0:
            issues.append(f"{where}: score {score} outside [0, 1]")
            continue
        try:
            masks = _parse_masks(segs, videos[vid].length, where)
        except DatasetError as exc:
            issues.extend(exc.issues)
            continue
        preds.append(TrackPrediction(vid, cat, score, masks, id=i))
    if issues:
        raise DatasetError("invalid predictions", issues)
    return tuple(preds)


def load(gt_src, pred_src=None):
    videos, categories, gts = load_ground_truth(gt_src)
    preds = () if pred_src is None else load_predictions(pred_src, videos, categories)
    return Dataset(videos, categories, gts, preds)


def _check_track(track, video, label, report):
    for t, m in enumerate(track.masks):
        if m is None:
            continue
        if (m.height, m.width) != (video.height, video.width):
            report.errors.append(
                f"{label} frame {t}: mask is {m.height}x{m.width}, "
                f"video {video.id} is {video.height}x{video.width}"
            )
            return
    zero = sum(1 for m in track.masks if m is not None and m.area == 0)
    if zero:
        report.warnings.append(f"{label}: {zero} zero-area non-null mask(s)")


def validate(dataset):
    """Collect structural problems without raising."""
    report = ValidationReport()
    seen = set()
    for g in dataset.gt_tracks:
        label = f"annotation {g.id}"
        if g.id in seen:
            report.errors.append(f"{label}: duplicate id")
        seen.add(g.id)
        video = dataset.videos.get(g.video_id)
        if video is None:
            report.errors.append(f"{label}: unknown video_id {g.video_id}")
            continue
        if g.category_id not in dataset.categories:
            report.errors.append(f"{label}: unknown category_id {g.category_id}")
        if len(g.masks) != video.length:
            report.errors.append(f"{label}: {len(g.masks)} frames, video has {video.length}")
        if g.temporal_length == 0:
            report.errors.append(f"{label}: every frame is empty")
        _check_track(g, video, label, report)

    fingerprints = {}
    for i, p in enumerate(dataset.predictions):
        label = f"prediction {p.id if p.id >= 0 else i}"
        video = dataset.videos.get(p.video_id)
        if video is None:
            report.errors.append(f"{label}: unknown video_id {p.video_id}")
            continue
        if p.category_id not in dataset.categories:
            report.errors.append(f"{label}: unknown category_id {p.category_id}")
        if not 0.0 <= p.score <= 1.0:
            report.errors.append(f"{label}: score {p.score} outside [0, 1]")
        if len(p.masks) != video.length:
            report.errors.append(f"{label}: {len(p.masks)} frames, video has {video.length}")
        _check_track(p, video, label, report)
        key = (p.video_id, p.category_id, p.score, p.masks)
        if key in fingerprints:
            report.warnings.append(f"{label}: duplicate of prediction {fingerprints[key]}")
        else:
            fingerprints[key] = p.id if p.id >= 0 else i
    return report


def _dump_masks(masks):
    return [None if m is None else rle.to_coco(m) for m in masks]


def dump_ground_truth(dataset):
    """Serialize videos, categories and GT tracks to the annotation layout."""
    return {
        "videos": [
            {
                "id": v.id,
                "width": v.width,
                "height": v.height,
                "length": v.length,
                "file_names": list(v.frame_names),
            }
            for v in dataset.videos.values()
        ],
        "annotations": [
            {
                "id": g.id,
                "video_id": g.video_id,
                "category_id": g.category_id,
                "segmentations": _dump_masks(g.masks),
                "iscrowd": int(g.iscrowd),
            }
            for g in dataset.gt_tracks
        ],
        "categories": [{"id": k, "name": v} for k, v in dataset.categories.items()],
    }


def dump_predictions(predictions):
    return [
        {
            "video_id": p.video_id,
            "category_id": p.category_id,
            "score": p.score,
            "segmentations": _dump_masks(p.masks),
        }
        for p in predictions
    ]


def gt_as_predictions(gt_tracks, score=1.0):
    """Replay ground truth as perfect predictions (crowd regions skipped)."""
    return tuple(
        TrackPrediction(g.video_id, g.category_id, score, g.masks, id=i)
        for i, g in enumerate(t for t in gt_tracks if not t.iscrowd)
    )


def write_json(obj, path):
    path = Path(path)
    with path.open("w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))

"""Greedy prediction-to-GT matching and COCO-style AP/AR.

Matching follows the cocoapi rules: within one (video, category) pair the
predictions are visited in descending score order (stable on ties) and each
claims the still-free GT with the highest sequence IoU at or above the
threshold.  Ignore GTs (crowd, or outside the temporal range being scored)
are only taken when no regular GT qualifies, and predictions landing on them
are ignored rather than counted.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .overlap import compute_overlaps, sequence_iou

RECALL_THRESHOLDS = np.linspace(0.0, 1.0, 101)
_EPS = np.spacing(1)


@dataclass(frozen=True)
class MatchRecord:
    pred: int
    video_id: object
    category_id: object
    score: float
    matched_gt: object = None
    iou_with_match: float = 0.0
    iou_max_same_class: float = 0.0
    iou_max_other_class: float = 0.0
    best_gt_same_class: object = None
    ignored: bool = False

    @property
    def is_tp(self):
        return self.matched_gt is not None and not self.ignored


def greedy_match(iou, gt_ignore, gt_crowd, thr):
    """Match predictions (rows, already score-sorted) to GTs (columns).

    Columns must be ordered with non-ignore GTs first.  Returns
    ``(pred_to_gt, pred_ignored)`` where unmatched rows hold -1.
    """
    n_d = len(iou)
    n_g = len(gt_ignore)
    pred_to_gt = [-1] * n_d
    pred_ig = [False] * n_d
    if n_g == 0:
        return pred_to_gt, pred_ig
    taken = [False] * n_g
    floor = min(thr, 1 - 1e-10)
    rows = iou.tolist() if isinstance(iou, np.ndarray) else iou
    for d in range(n_d):
        row = rows[d]
        best = floor
        m = -1
        for g in range(n_g):
            if taken[g] and not gt_crowd[g]:
                continue
            if m > -1 and not gt_ignore[m] and gt_ignore[g]:
                break
            if row[g] < best:
                continue
            best = row[g]
            m = g
        if m == -1:
            continue
        pred_ig[d] = bool(gt_ignore[m])
        pred_to_gt[d] = m
        taken[m] = True
    return pred_to_gt, pred_ig


def _ap_and_recall(scores, tp, ig, n_gt):
    """101-point interpolated precision and final recall for one PR list."""
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="mergesort")
    tp = np.asarray(tp, dtype=bool)[order]
    ig = np.asarray(ig, dtype=bool)[order]
    fp = ~tp & ~ig
    tp = tp & ~ig
    tp_sum = np.cumsum(tp, dtype=np.float64)
    fp_sum = np.cumsum(fp, dtype=np.float64)
    if tp_sum.size == 0:
        return 0.0, 0.0
    rc = tp_sum / n_gt
    pr = tp_sum / (fp_sum + tp_sum + _EPS)
    pr = np.maximum.accumulate(pr[::-1])[::-1]
    inds = np.searchsorted(rc, RECALL_THRESHOLDS, side="left")
    q = np.zeros(len(RECALL_THRESHOLDS))
    valid = inds < len(pr)
    q[valid] = pr[inds[valid]]
    return float(q.mean()), float(rc[-1])


def average_precision(records, n_gt):
    """AP in percentage points of a scored list of match outcomes.

    Returns None when ``n_gt`` is zero (category excluded from averages).
    """
    if n_gt < 1:
        return None
    scores = [r.score for r in records]
    tp = [r.matched_gt is not None for r in records]
    ig = [r.ignored for r in records]
    return 100.0 * _ap_and_recall(scores, tp, ig, n_gt)[0]


def match_category(preds, gts, iou_threshold, ious=None):
    """Greedy matching of one (video, category) group of tracks.

    ``ious`` may supply a precomputed ``(len(preds), len(gts))`` matrix.
    Records come back in the input order of ``preds``.
    """
    if ious is None:
        ious = np.array([[sequence_iou(g, p) for g in gts] for p in preds]).reshape(
            len(preds), len(gts)
        )
    ious = np.asarray(ious, dtype=np.float64).reshape(len(preds), len(gts))
    order = np.argsort([-p.score for p in preds], kind="mergesort")
    ignore = np.array([bool(g.iscrowd) for g in gts], dtype=bool)
    g_order = np.argsort(ignore, kind="mergesort")
    sub = ious[np.ix_(order, g_order)]
    to_gt, pig = greedy_match(sub, ignore[g_order], ignore[g_order], iou_threshold)
    out = [None] * len(preds)
    for rank, p in enumerate(order):
        m = to_gt[rank]
        row = ious[p]
        best = int(np.argmax(row)) if len(gts) else -1
        out[p] = MatchRecord(
            pred=int(p),
            video_id=preds[p].video_id,
            category_id=preds[p].category_id,
            score=preds[p].score,
            matched_gt=None if m < 0 else gts[g_order[m]].id,
            iou_with_match=0.0 if m < 0 else float(sub[rank, m]),
            iou_max_same_class=float(row.max()) if len(gts) else 0.0,
            best_gt_same_class=None if best < 0 else gts[best].id,
            ignored=pig[rank],
        )
    return out


# --- dataset-level evaluation over precomputed overlap tables ------------


@dataclass
class VideoView:
    """Numeric view of one video: what is scored and against what.

    ``pred_rows``/``gt_cols`` index into the shared overlap tables; the other
    arrays are aligned with them.  Oracle fixes derive new views by copying.
    """

    video_id: object
    overlaps: object
    pred_rows: np.ndarray
    pred_cat: np.ndarray
    pred_score: np.ndarray
    pred_outside: np.ndarray
    gt_cols: np.ndarray
    gt_cat: np.ndarray
    gt_ignore: np.ndarray
    gt_crowd: np.ndarray
    iou: np.ndarray

    @property
    def pred_idx(self):
        return self.overlaps.pred_idx[self.pred_rows]

    @property
    def gt_idx(self):
        return self.overlaps.gt_idx[self.gt_cols]

    def subset(self, keep_preds=None, keep_gts=None):
        kp = np.ones(len(self.pred_rows), bool) if keep_preds is None else np.asarray(keep_preds, bool)
        kg = np.ones(len(self.gt_cols), bool) if keep_gts is None else np.asarray(keep_gts, bool)
        return replace(
            self,
            pred_rows=self.pred_rows[kp],
            pred_cat=self.pred_cat[kp],
            pred_score=self.pred_score[kp],
            pred_outside=self.pred_outside[kp],
            gt_cols=self.gt_cols[kg],
            gt_cat=self.gt_cat[kg],
            gt_ignore=self.gt_ignore[kg],
            gt_crowd=self.gt_crowd[kg],
            iou=self.iou[np.ix_(kp, kg)],
        )


@dataclass
class EvalView:
    dataset: object
    videos: list
    categories: tuple

    def replace_videos(self, videos):
        return EvalView(self.dataset, videos, self.categories)


def build_view(dataset, overlaps=None, config=None, length_range=None, threads=1):
    """Numeric view of a dataset.

    ``length_range=(lo, hi)`` turns GTs outside the temporal range into ignore
    regions and marks out-of-range predictions so that they only count when
    they match an in-range GT.
    """
    from .config import EvalConfig, in_bin

    config = config or EvalConfig()
    if overlaps is None:
        overlaps = compute_overlaps(dataset, threads)
    mode = config.temporal_length_mode
    videos = []
    for vid, ov in overlaps.items():
        preds = [dataset.predictions[i] for i in ov.pred_idx]
        gts = [dataset.gt_tracks[i] for i in ov.gt_idx]
        keep = np.array([p.score >= config.min_score for p in preds], dtype=bool)
        crowd = np.array([g.iscrowd for g in gts], dtype=bool)
        ignore = crowd.copy()
        outside = np.zeros(len(preds), dtype=bool)
        if length_range is not None:
            lo, hi = length_range
            ignore |= np.array([not in_bin(g.length(mode), lo, hi) for g in gts], dtype=bool)
            # zero-length predictions are scored with the shortest bin
            outside = np.array(
                [not in_bin(max(p.length(mode), 1), lo, hi) for p in preds], dtype=bool
            )
        v = VideoView(
            vid,
            ov,
            np.arange(len(preds)),
            np.array([p.category_id for p in preds], dtype=object),
            np.array([p.score for p in preds], dtype=np.float64),
            outside,
            np.arange(len(gts)),
            np.array([g.category_id for g in gts], dtype=object),
            ignore,
            crowd,
            ov.iou,
        )
        videos.append(v.subset(keep_preds=keep))
    cats = tuple(sorted(dataset.categories, key=lambda c: (str(type(c)), c)))
    return EvalView(dataset, videos, cats)


@dataclass
class VideoMatch:
    """Matching outcome of one video at one IoU threshold (rows follow the view)."""

    pred_to_gt: np.ndarray
    pred_ignored: np.ndarray
    evaluated: np.ndarray


@dataclass
class EvalResult:
    thresholds: tuple
    max_dets: tuple
    categories: list
    ap: dict
    recall: dict
    n_gt: dict
    mAP: object
    ap50: object
    ar: dict
    match_threshold: object = None
    matches: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    sweep: tuple = ()

    def per_category(self):
        """``{category: {"n_gt", "map", "ap50"}}`` for categories with GT."""
        idx = [self.thresholds.index(t) for t in self.sweep]
        i50 = self.thresholds.index(0.5) if 0.5 in self.thresholds else None
        return {
            c: {
                "n_gt": self.n_gt[c],
                "map": float(np.mean(self.ap[c][idx])),
                "ap50": None if i50 is None else float(self.ap[c][i50]),
            }
            for c in self.categories
        }

    def ap_at(self, thr):
        i = self.thresholds.index(thr)
        vals = [self.ap[c][i] for c in self.categories]
        return float(np.mean(vals)) if vals else None


def _match_video(v, thresholds, max_det):
    """Run matching for each category of one video; returns per-category blocks."""
    blocks = {}
    n_rows = len(v.pred_rows)
    per_thr = {t: (np.full(n_rows, -1, dtype=np.int64), np.zeros(n_rows, bool)) for t in thresholds}
    evaluated = np.zeros(n_rows, dtype=bool)
    cats = set(v.pred_cat.tolist()) | set(v.gt_cat.tolist())
    for cat in cats:
        d = np.flatnonzero(v.pred_cat == cat)
        g = np.flatnonzero(v.gt_cat == cat)
        if d.size:
            d = d[np.argsort(-v.pred_score[d], kind="mergesort")][:max_det]
        g = g[np.argsort(v.gt_ignore[g], kind="mergesort")]
        evaluated[d] = True
        sub = v.iou[np.ix_(d, g)]
        g_ig = v.gt_ignore[g].tolist()
        g_crowd = v.gt_crowd[g].tolist()
        tps = []
        igs = []
        for t in thresholds:
            to_gt, pig = greedy_match(sub, g_ig, g_crowd, t)
            to_gt = np.asarray(to_gt, dtype=np.int64)
            pig = np.asarray(pig, dtype=bool)
            pig |= (to_gt < 0) & v.pred_outside[d]
            mapped = np.where(to_gt >= 0, g[np.maximum(to_gt, 0)], -1) if g.size else to_gt
            per_thr[t][0][d] = mapped
            per_thr[t][1][d] = pig
            tps.append(to_gt >= 0)
            igs.append(pig)
        npig = int(np.count_nonzero(~v.gt_ignore[g]))
        blocks[cat] = (v.pred_score[d], tps, igs, npig)
    return blocks, per_thr, evaluated


def evaluate_view(
    view, thresholds, max_dets=(1, 10, 100), match_threshold=None, records=False, with_ap50=True
):
    """Score a view.

    ``match_threshold`` keeps the per-video matching at that IoU threshold
    (it is added to the evaluated thresholds if missing); ``records`` also
    materializes :class:`MatchRecord` objects for it.
    """
    thresholds = tuple(thresholds)
    run_thr = thresholds
    if match_threshold is not None and match_threshold not in run_thr:
        run_thr = run_thr + (match_threshold,)
    if with_ap50 and 0.5 not in run_thr:
        run_thr = run_thr + (0.5,)
    max_det = max(max_dets)

    per_cat = {c: [] for c in view.categories}
    matches = {}
    for v in view.videos:
        blocks, per_thr, evaluated = _match_video(v, run_thr, max_det)
        for cat, blk in blocks.items():
            per_cat.setdefault(cat, []).append(blk)
        if match_threshold is not None:
            to_gt, pig = per_thr[match_threshold]
            matches[v.video_id] = VideoMatch(to_gt, pig, evaluated)

    ap = {}
    recall = {}
    n_gt = {}
    cats = []
    for cat in view.categories:
        blks = per_cat.get(cat, [])
        npig = sum(b[3] for b in blks)
        n_gt[cat] = npig
        if npig == 0:
            continue
        cats.append(cat)
        ap_c = np.zeros(len(run_thr))
        rec_c = {k: np.zeros(len(run_thr)) for k in max_dets}
        for k in max_dets:
            scores = np.concatenate([b[0][:k] for b in blks]) if blks else np.zeros(0)
            for ti in range(len(run_thr)):
                tp = np.concatenate([b[1][ti][:k] for b in blks]) if blks else np.zeros(0, bool)
                ig = np.concatenate([b[2][ti][:k] for b in blks]) if blks else np.zeros(0, bool)
                a, r = _ap_and_recall(scores, tp, ig, npig)
                rec_c[k][ti] = 100.0 * r
                if k == max_det:
                    ap_c[ti] = 100.0 * a
        ap[cat] = ap_c
        recall[cat] = rec_c

    sweep = [run_thr.index(t) for t in thresholds]
    if cats:
        m_ap = float(np.mean([ap[c][sweep] for c in cats]))
        ap50 = float(np.mean([ap[c][run_thr.index(0.5)] for c in cats])) if 0.5 in run_thr else None
        ar = {k: float(np.mean([recall[c][k][sweep] for c in cats])) for k in max_dets}
    else:
        m_ap = ap50 = None
        ar = {k: None for k in max_dets}
    result = EvalResult(
        thresholds=run_thr,
        max_dets=tuple(max_dets),
        categories=cats,
        ap=ap,
        recall=recall,
        n_gt=n_gt,
        mAP=m_ap,
        ap50=ap50,
        ar=ar,
        match_threshold=match_threshold,
        matches=matches,
        sweep=thresholds,
    )
    if records and match_threshold is not None:
        result.records = build_records(view, matches)
    return result


def build_records(view, matches):
    out = []
    for v in view.videos:
        m = matches[v.video_id]
        gt_ids = [view.dataset.gt_tracks[i].id for i in v.gt_idx]
        pidx = v.pred_idx
        for r in range(len(v.pred_rows)):
            if not m.evaluated[r]:
                continue
            same = (v.gt_cat == v.pred_cat[r]) & ~v.gt_ignore
            other = (v.gt_cat != v.pred_cat[r]) & ~v.gt_ignore
            row = v.iou[r]
            best = -1
            if same.any():
                cand = np.flatnonzero(same)
                best = int(cand[np.argmax(row[cand])])
            g = int(m.pred_to_gt[r])
            out.append(
                MatchRecord(
                    pred=int(pidx[r]),
                    video_id=v.video_id,
                    category_id=v.pred_cat[r],
                    score=float(v.pred_score[r]),
                    matched_gt=None if g < 0 else gt_ids[g],
                    iou_with_match=0.0 if g < 0 else float(row[g]),
                    iou_max_same_class=float(row[same].max()) if same.any() else 0.0,
                    iou_max_other_class=float(row[other].max()) if other.any() else 0.0,
                    best_gt_same_class=None if best < 0 else gt_ids[best],
                    ignored=bool(m.pred_ignored[r]),
                )
            )
    return out


def evaluate(dataset, config=None, threads=1, overlaps=None):
    """Full evaluation: mAP over the IoU sweep, AP@50, AR at each detection cap.

    The matching at ``config.thr_f`` is kept on the result for error analysis.
    """
    from .config import EvalConfig

    config = config or EvalConfig()
    view = build_view(dataset, overlaps, config, threads=threads)
    return evaluate_view(
        view, config.iou_thresholds, config.max_dets, match_threshold=config.thr_f, records=True
    )

"""Segmentation scoring against labeled ground truth.

Predicted segments carry arbitrary ids, so scoring first matches segments
to ground-truth classes by maximum-overlap Hungarian assignment, relabels
matched segments to their class, and pools every unmatched segment into a
reserved "none" label that can never score.  Accuracy, macro F1 and mean
IoU then come from the relabeled confusion counts; pixels whose ground
truth equals the ignore label never count.

Dataset-level aggregation supports three strategies:

``global``
    per-image matching, confusion counts pooled over the dataset, metrics
    computed once — large images dominate.
``per_image``
    metrics per image, arithmetic mean — every image counts equally.
``oracle_merged``
    predicted segments are first merged into their plurality ground-truth
    class (an upper bound for any merge post-process), then scored per
    image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

IGNORE_LABEL = 255
STRATEGIES = ("global", "per_image", "oracle_merged")


@dataclass
class ContingencyTable:
    """Pixel overlap counts between predicted segments and gt classes."""

    counts: np.ndarray  # (K, C) int64
    pred_ids: np.ndarray
    gt_ids: np.ndarray
    ignore_count: int = 0

    @property
    def pred_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def gt_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=0)


@dataclass
class MatchResult:
    """Injective pred-to-class assignment from Hungarian matching."""

    pairs: list  # (pred_id, gt_id)
    unmatched_preds: list


@dataclass
class MetricsReport:
    accuracy: float
    f1: float
    miou: float
    strategy: str
    n_images: int = 1
    n_skipped: int = 0
    per_class: dict | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        out = {
            "strategy": self.strategy,
            "accuracy": self.accuracy,
            "f1": self.f1,
            "miou": self.miou,
            "n_images": self.n_images,
            "n_skipped": self.n_skipped,
        }
        if self.per_class is not None:
            out["per_class"] = {
                str(c): dict(v) for c, v in sorted(self.per_class.items())
            }
        return out


def contingency(pred: np.ndarray, gt: np.ndarray, ignore_label: int = IGNORE_LABEL) -> ContingencyTable:
    """Overlap counts over pixels whose ground truth is not ignored.

    Rows cover predicted ids present on at least one counted pixel; columns
    cover ground-truth classes present after ignoring.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    keep = gt.ravel() != ignore_label
    p = pred.ravel()[keep]
    g = gt.ravel()[keep]
    ignore_count = int(keep.size - keep.sum())
    if p.size == 0:
        return ContingencyTable(
            counts=np.zeros((0, 0), dtype=np.int64),
            pred_ids=np.empty(0, dtype=np.int64),
            gt_ids=np.empty(0, dtype=np.int64),
            ignore_count=ignore_count,
        )
    pred_ids, p_inv = np.unique(p, return_inverse=True)
    gt_ids, g_inv = np.unique(g, return_inverse=True)
    k, c = pred_ids.size, gt_ids.size
    counts = np.bincount(p_inv * c + g_inv, minlength=k * c).reshape(k, c)
    return ContingencyTable(
        counts=counts.astype(np.int64),
        pred_ids=pred_ids.astype(np.int64),
        gt_ids=gt_ids.astype(np.int64),
        ignore_count=ignore_count,
    )


def hungarian_match(table: ContingencyTable) -> MatchResult:
    """Maximum-total-overlap injective assignment of segments to classes.

    With more segments than classes (or vice versa) only ``min(K, C)``
    pairs form; a pair forced by rectangular padding may carry zero
    overlap.  Segments left out are reported as unmatched.
    """
    k, c = table.counts.shape
    if k == 0 or c == 0:
        return MatchResult(pairs=[], unmatched_preds=[int(i) for i in table.pred_ids])
    rows, cols = linear_sum_assignment(table.counts, maximize=True)
    pairs = [(int(table.pred_ids[r]), int(table.gt_ids[col])) for r, col in zip(rows, cols)]
    assigned = set(int(r) for r in rows)
    unmatched = [int(table.pred_ids[i]) for i in range(k) if i not in assigned]
    return MatchResult(pairs=pairs, unmatched_preds=unmatched)


def _class_counts(table: ContingencyTable, match: MatchResult) -> dict:
    """Per-class (tp, fp, fn) after relabeling matched segments.

    Unmatched segments collapse into a reserved non-class: their pixels are
    false negatives for whatever class they sit on and true positives for
    nothing.
    """
    row_of = {int(pid): i for i, pid in enumerate(table.pred_ids)}
    col_of = {int(gid): j for j, gid in enumerate(table.gt_ids)}
    row_sums = table.counts.sum(axis=1)
    col_sums = table.counts.sum(axis=0)
    out = {}
    matched_col = {}
    for pid, gid in match.pairs:
        matched_col[gid] = row_of[pid]
    for gid in (int(g) for g in table.gt_ids):
        j = col_of[gid]
        if gid in matched_col:
            i = matched_col[gid]
            tp = int(table.counts[i, j])
            fp = int(row_sums[i]) - tp
        else:
            tp = 0
            fp = 0
        fn = int(col_sums[j]) - tp
        out[gid] = (tp, fp, fn)
    return out


def compute_metrics(table: ContingencyTable, match: MatchResult, strategy: str = "global") -> MetricsReport:
    """Accuracy, macro F1 and mIoU for one matched contingency table."""
    if table.counts.size == 0 or table.counts.sum() == 0:
        raise ValueError("no scorable pixels (empty or fully ignored ground truth)")
    per_class = _class_counts(table, match)
    return _report_from_counts(per_class, strategy, n_images=1)


def _report_from_counts(per_class: dict, strategy: str, n_images: int, n_skipped: int = 0) -> MetricsReport:
    total_gt = sum(tp + fn for tp, _, fn in per_class.values())
    total_tp = sum(tp for tp, _, _ in per_class.values())
    ious, f1s, detail = [], [], {}
    for gid, (tp, fp, fn) in sorted(per_class.items()):
        iou = tp / (tp + fp + fn) if tp + fp + fn else 0.0
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
        ious.append(iou)
        f1s.append(f1)
        detail[gid] = {"tp": tp, "fp": fp, "fn": fn, "iou": iou, "f1": f1}
    return MetricsReport(
        accuracy=total_tp / total_gt,
        f1=float(np.mean(f1s)),
        miou=float(np.mean(ious)),
        strategy=strategy,
        n_images=n_images,
        n_skipped=n_skipped,
        per_class=detail,
    )


def oracle_merge(pred: np.ndarray, gt: np.ndarray, ignore_label: int = IGNORE_LABEL) -> np.ndarray:
    """Relabel each predicted segment to its plurality ground-truth class.

    Ignored pixels do not vote; ties go to the lower class id.  Segments
    overlapping only ignored pixels keep fresh labels distinct from every
    class id, so they stay separate segments.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    table = contingency(pred, gt, ignore_label)
    merged = np.array(pred, copy=True)
    classes = set(int(g) for g in np.unique(gt)) - {int(ignore_label)}
    fresh = (max(classes) + 1) if classes else 0
    voted = {}
    for i, pid in enumerate(table.pred_ids):
        row = table.counts[i]
        if row.sum() > 0:
            # np.argmax takes the first maximum; gt_ids are sorted, so ties
            # resolve to the lower class id
            voted[int(pid)] = int(table.gt_ids[np.argmax(row)])
    for pid in np.unique(pred):
        pid = int(pid)
        if pid in voted:
            merged[pred == pid] = voted[pid]
        else:
            merged[pred == pid] = fresh
            fresh += 1
    return merged


def evaluate_dataset(
    pairs,
    strategy: str = "global",
    ignore_label: int = IGNORE_LABEL,
) -> MetricsReport:
    """Score a dataset of (pred, gt) label arrays under one strategy.

    Images whose ground truth is empty after ignoring are flagged and
    excluded from averaging; per-image evaluation errors are skipped the
    same way rather than aborting the run.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; pick from {STRATEGIES}")
    pooled: dict = {}
    reports = []
    scored = 0
    skipped = 0
    for pred, gt in pairs:
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if strategy == "oracle_merged":
            pred = oracle_merge(pred, gt, ignore_label)
        table = contingency(pred, gt, ignore_label)
        if table.counts.size == 0 or table.counts.sum() == 0:
            skipped += 1
            continue
        match = hungarian_match(table)
        per_class = _class_counts(table, match)
        scored += 1
        if strategy == "global":
            for gid, (tp, fp, fn) in per_class.items():
                otp, ofp, ofn = pooled.get(gid, (0, 0, 0))
                pooled[gid] = (otp + tp, ofp + fp, ofn + fn)
        else:
            reports.append(_report_from_counts(per_class, strategy, n_images=1))
    if strategy == "global":
        if not pooled:
            raise ValueError("no scorable images in dataset")
        return _report_from_counts(pooled, strategy, n_images=scored, n_skipped=skipped)
    if not reports:
        raise ValueError("no scorable images in dataset")
    return MetricsReport(
        accuracy=float(np.mean([r.accuracy for r in reports])),
        f1=float(np.mean([r.f1 for r in reports])),
        miou=float(np.mean([r.miou for r in reports])),
        strategy=strategy,
        n_images=len(reports),
        n_skipped=skipped,
        per_class=None,
    )

"""Segmentation scoring: confusion matrices, per-class IoU, grouped means.

IoU of class c is diag / (row_sum + col_sum - diag) over the count
matrix indexed [ground truth, prediction].  A class absent from both
ground truth and predictions (0/0) has no defined IoU and is
excluded from every mean rather than counted as zero.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analytic import IGNORE
from .errors import DataError


@dataclass
class SegMetrics:
    """Per-class IoU plus grouped means over base / incremental / all."""

    per_class_iou: dict  # class id -> float, defined classes only
    miou_base: float
    miou_incremental: float
    miou_all: float
    miou_all_no_bg: float
    confusion: np.ndarray
    class_ids: list = field(default_factory=list)

    def row(self):
        return {
            "miou_base": self.miou_base,
            "miou_incremental": self.miou_incremental,
            "miou_all": self.miou_all,
            "miou_all_no_bg": self.miou_all_no_bg,
        }


def confusion_accumulate(pred, gt, n_classes: int, confusion=None) -> np.ndarray:
    """Add one batch of (prediction, ground truth) pairs to a count matrix.

    Entries are indexed [gt, pred]; IGNORE ground-truth elements are
    skipped.  Accumulation is associative: partial matrices from
    element chunks sum to the full matrix.
    """
    pred = np.asarray(pred, dtype=np.int64)
    gt = np.asarray(gt, dtype=np.int64)
    if pred.shape != gt.shape or pred.ndim != 1:
        raise DataError(f"pred shape {pred.shape} vs gt shape {gt.shape}")
    if n_classes < 1:
        raise DataError(f"n_classes must be >= 1, got {n_classes}")
    keep = gt != IGNORE
    if ((gt[keep] < 0) | (gt[keep] >= n_classes)).any():
        raise DataError(f"ground-truth ids outside 0..{n_classes - 1}")
    if ((pred[keep] < 0) | (pred[keep] >= n_classes)).any():
        raise DataError(f"prediction ids outside 0..{n_classes - 1}")
    counts = kernels.confusion_count(gt, pred, int(n_classes))
    if confusion is None:
        return counts
    confusion = np.asarray(confusion)
    if confusion.shape != counts.shape:
        raise DataError(
            f"confusion shape {confusion.shape} does not match n_classes {n_classes}"
        )
    return confusion + counts


def per_class_iou(confusion) -> np.ndarray:
    """IoU per class index; NaN where the class is absent from gt and pred."""
    m = np.asarray(confusion, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError(f"confusion matrix must be square, got {m.shape}")
    tp = np.diag(m)
    denom = m.sum(axis=1) + m.sum(axis=0) - tp
    with np.errstate(invalid="ignore", divide="ignore"):
        iou = np.where(denom > 0, tp / denom, np.nan)
    return iou


def _group_mean(iou_by_id, ids):
    vals = [iou_by_id[c] for c in ids if c in iou_by_id]
    return float(np.mean(vals)) if vals else float("nan")


def iou_from_confusion(confusion, class_ids, base_ids, background_id=None) -> SegMetrics:
    """Score a confusion matrix whose row/col j belongs to class_ids[j].

    ``base_ids`` defines the base group; incremental is everything
    else; undefined (0/0) classes drop out of all means.  miou_all
    averages every defined class including background; miou_all_no_bg
    excludes the background class.
    """
    class_ids = [int(c) for c in class_ids]
    m = np.asarray(confusion)
    if m.shape[0] != len(class_ids):
        raise DataError(
            f"confusion size {m.shape[0]} vs {len(class_ids)} class ids"
        )
    iou = per_class_iou(m)
    defined = {c: float(iou[j]) for j, c in enumerate(class_ids) if np.isfinite(iou[j])}
    base = [c for c in class_ids if c in set(int(b) for b in base_ids)]
    incr = [c for c in class_ids if c not in set(int(b) for b in base_ids)]
    no_bg = [c for c in class_ids if background_id is None or c != background_id]
    return SegMetrics(
        per_class_iou=defined,
        miou_base=_group_mean(defined, base),
        miou_incremental=_group_mean(defined, incr),
        miou_all=_group_mean(defined, class_ids),
        miou_all_no_bg=_group_mean(defined, no_bg),
        confusion=m,
        class_ids=class_ids,
    )

"""Pseudo-labeling for 2D streams under semantic drift.

When old classes collapse into the background label of a new step,
background pixels whose previous-model prediction is confident
(uncertainty at or below tau) take that prediction as their training
label; the rest stay background.  Pixels labeled with a current-step
class always keep their ground truth.
"""

import numpy as np

from .analytic import IGNORE
from .errors import DataError


def uncertainty_2d(prev_logits) -> np.ndarray:
    """Per-element uncertainty 1 - sigmoid(max logit), in [0, 1].

    Computed as 1 / (1 + exp(m)) which is exact at m = 0 and stable
    for large positive maxima.
    """
    logits = np.asarray(prev_logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[1] < 1:
        raise DataError(f"logits must be N x C with C >= 1, got shape {logits.shape}")
    if not np.isfinite(logits).all():
        raise DataError("non-finite logits")
    m = logits.max(axis=1)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(m))


def relabel_2d(gt_labels, prev_logits, prev_class_ids, current_classes, background_id, tau) -> np.ndarray:
    """Resolve background pixels against the frozen previous model.

    Rules, per element (U = uncertainty, yhat = previous argmax as a
    class id, ties to the lowest column):

      gt in current_classes          -> gt
      gt == background and U >  tau  -> background
      gt == background and U <= tau  -> yhat   (equality pseudo-labels)
      gt == IGNORE                   -> IGNORE

    yhat may itself be the background class; the element then simply
    stays background.
    """
    gt = np.asarray(gt_labels, dtype=np.int64)
    logits = np.asarray(prev_logits, dtype=np.float64)
    if gt.shape[0] != logits.shape[0]:
        raise DataError(f"{gt.shape[0]} labels vs {logits.shape[0]} logit rows")
    prev_ids = np.asarray([int(c) for c in prev_class_ids], dtype=np.int64)
    if prev_ids.shape[0] != logits.shape[1]:
        raise DataError(
            f"{logits.shape[1]} logit columns vs {prev_ids.shape[0]} previous class ids"
        )
    if not 0.0 <= tau <= 1.0:
        raise DataError(f"tau must lie in [0, 1], got {tau}")
    if background_id == IGNORE:
        raise DataError("background id collides with the IGNORE sentinel")
    current = np.asarray(sorted(set(int(c) for c in current_classes)), dtype=np.int64)

    allowed = np.isin(gt, current) | (gt == background_id) | (gt == IGNORE)
    if not allowed.all():
        bad = np.unique(gt[~allowed])
        raise DataError(
            f"labels {bad.tolist()} are neither current classes, background, nor IGNORE"
        )

    unc = uncertainty_2d(logits)
    yhat = prev_ids[np.argmax(logits, axis=1)]

    out = gt.copy()
    # the keep-gt rule wins even if background is (unusually) in current_classes
    take = (gt == background_id) & (unc <= tau) & ~np.isin(gt, current)
    out[take] = yhat[take]
    return out

"""Pseudo-labeling for 3D point streams.

Point-cloud background resolution leans on spatial structure: each
point's uncertainty is a BALD-style disagreement over its K nearest
neighbors (cosine-weighted, probabilities from the frozen previous
model), and points the previous model cannot resolve fall back to
the nearest confidently labeled neighbor.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .analytic import IGNORE
from .errors import DataError

WEIGHT_FLOOR = kernels.WEIGHT_FLOOR


@dataclass
class Neighborhoods:
    """KNN result for every point, struct-of-arrays.

    Rows are query points; columns are neighbors in ascending
    (distance, index) order.  The query point never appears among its
    own neighbors, and weights are cosine similarities clamped into
    [WEIGHT_FLOOR, 1] (zero-norm pairs get the floor).
    """

    indices: np.ndarray  # n x k int64
    distances: np.ndarray  # n x k float64, nondecreasing along axis 1
    weights: np.ndarray  # n x k float64 in [WEIGHT_FLOOR, 1]

    @property
    def k(self):
        return int(self.indices.shape[1])


def knn_cosine(coords, k: int) -> Neighborhoods:
    """Brute-force Euclidean KNN with cosine-similarity weights."""
    c = np.ascontiguousarray(coords, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != 3:
        raise DataError(f"coords must be N x 3, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise DataError("non-finite coordinates")
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if c.shape[0] <= k:
        raise DataError(f"need more than k={k} points, got {c.shape[0]}")
    idx, dist, w = kernels.knn_brute(c, int(k))
    return Neighborhoods(indices=idx, distances=dist, weights=w)


def _check_probs(prev_probs):
    p = np.ascontiguousarray(prev_probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] < 1:
        raise DataError(f"probabilities must be N x C, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise DataError("non-finite probabilities")
    if (p < 0.0).any() or (np.abs(p.sum(axis=1) - 1.0) > 1e-6).any():
        raise DataError("probability rows must lie on the simplex (tol 1e-6)")
    return p


def bald_uncertainty(prev_probs, neighborhoods: Neighborhoods) -> np.ndarray:
    """Neighborhood disagreement score per point.

    With q_kc = prob of class c at neighbor k, w_k its weight and
    m_c = mean_k(q_kc w_k):

        U = -sum_c m_c log m_c + mean_k sum_c (q_kc w_k) log(q_kc w_k)

    log arguments are floored at 1e-12.  U is ~0 when all neighbors
    agree and grows with disagreement.
    """
    p = _check_probs(prev_probs)
    if neighborhoods.indices.size == 0 or neighborhoods.k == 0:
        raise DataError("empty neighborhoods")
    if neighborhoods.indices.max() >= p.shape[0]:
        raise DataError(
            f"neighbor index {int(neighborhoods.indices.max())} out of range "
            f"for {p.shape[0]} probability rows"
        )
    return kernels.bald_aggregate(p, neighborhoods.indices, neighborhoods.weights)


def relabel_3d(gt_labels, prev_probs, neighborhoods: Neighborhoods, prev_class_ids,
               current_classes, background_id, tau) -> np.ndarray:
    """Resolve background points against the previous model and neighbors.

    Rules, per point (U = bald_uncertainty, yhat = previous argmax as
    a class id):

      gt in current_classes                         -> gt
      gt == bg and yhat != bg and U <= tau          -> yhat
      gt == bg and (yhat == bg or U > tau)          -> label of the nearest
          neighbor k' with yhat_k' != bg and U_k' <= tau, scanning in
          ascending distance; background when no such neighbor exists
      gt == IGNORE                                  -> IGNORE

    Neighbor uncertainties in the fallback are the same BALD scores
    computed for every point.
    """
    gt = np.asarray(gt_labels, dtype=np.int64)
    p = _check_probs(prev_probs)
    if gt.shape[0] != p.shape[0] or gt.shape[0] != neighborhoods.indices.shape[0]:
        raise DataError(
            f"size mismatch: {gt.shape[0]} labels, {p.shape[0]} probability rows, "
            f"{neighborhoods.indices.shape[0]} neighborhoods"
        )
    prev_ids = np.asarray([int(c) for c in prev_class_ids], dtype=np.int64)
    if prev_ids.shape[0] != p.shape[1]:
        raise DataError(
            f"{p.shape[1]} probability columns vs {prev_ids.shape[0]} previous class ids"
        )
    if tau < 0.0:
        raise DataError(f"tau must be >= 0, got {tau}")
    if background_id == IGNORE:
        raise DataError("background id collides with the IGNORE sentinel")
    current = np.asarray(sorted(set(int(c) for c in current_classes)), dtype=np.int64)

    allowed = np.isin(gt, current) | (gt == background_id) | (gt == IGNORE)
    if not allowed.all():
        bad = np.unique(gt[~allowed])
        raise DataError(
            f"labels {bad.tolist()} are neither current classes, background, nor IGNORE"
        )

    unc = bald_uncertainty(p, neighborhoods)
    yhat = prev_ids[np.argmax(p, axis=1)]

    out = gt.copy()
    is_bg = (gt == background_id) & ~np.isin(gt, current)
    direct = is_bg & (yhat != background_id) & (unc <= tau)
    out[direct] = yhat[direct]

    fallback = is_bg & ~direct
    if fallback.any():
        nbr = kernels.first_valid_neighbor(
            neighborhoods.indices, yhat, unc, np.int64(background_id), float(tau)
        )
        found = fallback & (nbr >= 0)
        out[found] = yhat[nbr[found]]
        # not found: stays background (gt value)
    return out

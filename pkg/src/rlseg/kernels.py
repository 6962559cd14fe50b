"""Hot per-element kernels with two interchangeable backends.

Every kernel exists twice: a vectorized pure-numpy version and a
numba ``@njit`` loop version.  The active backend is chosen once at
import time from the ``RLSEG_BACKEND`` environment variable:

    RLSEG_BACKEND=numba   require numba (error if not importable)
    RLSEG_BACKEND=numpy   force the pure-numpy fallback
    unset / auto          numba when importable, else numpy

Dense linear algebra (Gram matrices, SPD solves, the classifier
update) stays on BLAS-backed numpy/scipy in the analytic module;
jitting those would only re-implement BLAS badly.  The kernels here
are the loop-shaped ones: brute-force KNN with lexicographic
tie-breaking, neighborhood BALD aggregation, the nearest-valid-
neighbor relabel scan, and confusion counting.

Both backends compute the same quantities: KNN neighbor sets,
distances and weights match exactly (identical per-pair arithmetic
and an explicit index tie-break), integer counts match exactly, and
the BALD scores agree to float64 roundoff (summation order differs).
`rlseg bench --kernels` compares backend speed.
"""

import os

import numpy as np

from .errors import ConfigError

_ENV_FLAG = "RLSEG_BACKEND"
_requested = os.environ.get(_ENV_FLAG, "auto").strip().lower() or "auto"
if _requested not in ("auto", "numba", "numpy"):
    raise ConfigError(
        f"{_ENV_FLAG} must be 'numba', 'numpy' or unset, got {_requested!r}"
    )

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via RLSEG_BACKEND=numpy
    numba = None
    _HAVE_NUMBA = False

if _requested == "numba" and not _HAVE_NUMBA:
    raise ConfigError("RLSEG_BACKEND=numba but numba is not importable")

#: name of the backend actually in use ("numba" or "numpy")
BACKEND = "numpy" if (_requested == "numpy" or not _HAVE_NUMBA) else "numba"

WEIGHT_FLOOR = 1e-6  # cosine weights are clamped into [WEIGHT_FLOOR, 1]
LOG_FLOOR = 1e-12  # arguments of log() are floored here


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _knn_numpy(coords, k):
    """Brute-force Euclidean KNN, self excluded.

    Neighbors are ordered by (squared distance, index) ascending; the
    index tie-break makes the result independent of backend and sort
    algorithm.  Returns (indices, distances, cosine weights).
    """
    n = coords.shape[0]
    norms = np.sqrt((coords * coords).sum(axis=1))
    idx_out = np.empty((n, k), dtype=np.int64)
    d2_out = np.empty((n, k), dtype=np.float64)
    w_out = np.empty((n, k), dtype=np.float64)
    # chunk queries to bound the chunk x n x 3 broadcast at ~50 MB
    chunk = max(1, min(n, 2_000_000 // n))
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        diff = coords[s:e, None, :] - coords[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        d2[np.arange(e - s), np.arange(s, e)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        idx_out[s:e] = order
        d2_out[s:e] = np.take_along_axis(d2, order, axis=1)
        dots = (coords[s:e, None, :] * coords[order]).sum(axis=2)
        denom = norms[s:e, None] * norms[order]
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.where(denom > 0.0, dots / denom, WEIGHT_FLOOR)
        w_out[s:e] = np.clip(cos, WEIGHT_FLOOR, 1.0)
    return idx_out, np.sqrt(d2_out), w_out


def _bald_numpy(probs, nbr_idx, nbr_w):
    """Weighted-neighborhood BALD disagreement per query point."""
    k = nbr_idx.shape[1]
    q = probs[nbr_idx] * nbr_w[:, :, None]  # n x k x c
    m = q.sum(axis=1) / k  # n x c
    ent_mean = -(m * np.log(np.maximum(m, LOG_FLOOR))).sum(axis=1)
    mean_ent = (q * np.log(np.maximum(q, LOG_FLOOR))).sum(axis=(1, 2)) / k
    return ent_mean + mean_ent


def _first_valid_neighbor_numpy(nbr_idx, pred, unc, background_id, tau):
    """Index of the first neighbor (ascending distance) whose prediction
    is non-background with uncertainty <= tau; -1 when none exists."""
    ok = (pred[nbr_idx] != background_id) & (unc[nbr_idx] <= tau)
    first = np.argmax(ok, axis=1)
    found = ok.any(axis=1)
    return np.where(found, nbr_idx[np.arange(nbr_idx.shape[0]), first], -1)


def _confusion_numpy(gt, pred, n_classes):
    """Count matrix indexed [gt, pred]; negative gt rows are skipped."""
    keep = gt >= 0
    flat = gt[keep].astype(np.int64) * n_classes + pred[keep].astype(np.int64)
    counts = np.bincount(flat, minlength=n_classes * n_classes)
    return counts.reshape(n_classes, n_classes)


# ---------------------------------------------------------------------------
# numba loop implementations (same arithmetic, element order preserved)
# ---------------------------------------------------------------------------

def _knn_loops(coords, k):
    n = coords.shape[0]
    idx_out = np.empty((n, k), dtype=np.int64)
    d2_out = np.empty((n, k), dtype=np.float64)
    w_out = np.empty((n, k), dtype=np.float64)
    norms = np.empty(n, dtype=np.float64)
    for i in range(n):
        norms[i] = np.sqrt(
            coords[i, 0] * coords[i, 0]
            + coords[i, 1] * coords[i, 1]
            + coords[i, 2] * coords[i, 2]
        )
    for i in range(n):
        best_d = np.full(k, np.inf)
        best_i = np.full(k, -1, dtype=np.int64)
        for j in range(n):
            if j == i:
                continue
            dx = coords[i, 0] - coords[j, 0]
            dy = coords[i, 1] - coords[j, 1]
            dz = coords[i, 2] - coords[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < best_d[k - 1]:  # strict: equal d2 keeps the lower index
                p = k - 1
                while p > 0 and d2 < best_d[p - 1]:
                    best_d[p] = best_d[p - 1]
                    best_i[p] = best_i[p - 1]
                    p -= 1
                best_d[p] = d2
                best_i[p] = j
        for p in range(k):
            j = best_i[p]
            idx_out[i, p] = j
            d2_out[i, p] = best_d[p]
            dot = (
                coords[i, 0] * coords[j, 0]
                + coords[i, 1] * coords[j, 1]
                + coords[i, 2] * coords[j, 2]
            )
            denom = norms[i] * norms[j]
            cos = dot / denom if denom > 0.0 else WEIGHT_FLOOR
            if cos < WEIGHT_FLOOR:
                cos = WEIGHT_FLOOR
            elif cos > 1.0:
                cos = 1.0
            w_out[i, p] = cos
    return idx_out, np.sqrt(d2_out), w_out


def _bald_loops(probs, nbr_idx, nbr_w):
    n, k = nbr_idx.shape
    c = probs.shape[1]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        ent_mean = 0.0
        mean_ent = 0.0
        for cc in range(c):
            m = 0.0
            for kk in range(k):
                q = probs[nbr_idx[i, kk], cc] * nbr_w[i, kk]
                mq = q if q > LOG_FLOOR else LOG_FLOOR
                mean_ent += q * np.log(mq)
                m += q
            m /= k
            mm = m if m > LOG_FLOOR else LOG_FLOOR
            ent_mean -= m * np.log(mm)
        out[i] = ent_mean + mean_ent / k
    return out


def _first_valid_neighbor_loops(nbr_idx, pred, unc, background_id, tau):
    n, k = nbr_idx.shape
    out = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for kk in range(k):
            j = nbr_idx[i, kk]
            if pred[j] != background_id and unc[j] <= tau:
                out[i] = j
                break
    return out


def _confusion_loops(gt, pred, n_classes):
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    for i in range(gt.shape[0]):
        g = gt[i]
        if g >= 0:
            out[g, pred[i]] += 1
    return out


if _HAVE_NUMBA:
    _knn_numba = numba.njit(cache=True)(_knn_loops)
    _bald_numba = numba.njit(cache=True)(_bald_loops)
    _first_valid_neighbor_numba = numba.njit(cache=True)(_first_valid_neighbor_loops)
    _confusion_numba = numba.njit(cache=True)(_confusion_loops)
else:
    _knn_numba = None
    _bald_numba = None
    _first_valid_neighbor_numba = None
    _confusion_numba = None

_IMPLS = {
    "numpy": {
        "knn": _knn_numpy,
        "bald": _bald_numpy,
        "first_valid_neighbor": _first_valid_neighbor_numpy,
        "confusion": _confusion_numpy,
    },
    "numba": {
        "knn": _knn_numba,
        "bald": _bald_numba,
        "first_valid_neighbor": _first_valid_neighbor_numba,
        "confusion": _confusion_numba,
    },
}


def get_impl(name, backend=None):
    """Look up a kernel by name, optionally pinning the backend."""
    backend = backend or BACKEND
    fn = _IMPLS[backend][name]
    if fn is None:
        raise ConfigError(f"backend {backend!r} unavailable for kernel {name!r}")
    return fn


def available_backends():
    return ("numpy", "numba") if _HAVE_NUMBA else ("numpy",)


knn_brute = get_impl("knn")
bald_aggregate = get_impl("bald")
first_valid_neighbor = get_impl("first_valid_neighbor")
confusion_count = get_impl("confusion")

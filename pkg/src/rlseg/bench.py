"""Timing studies for the update kernels and the kernel backends.

Covers three questions: how the direct update scales with the
expanded width (cubic model fit), when the Woodbury form beats the
direct form (small batches against wide features), and how one
recursive pass compares against a conventional 10-epoch
minibatch-SGD linear classifier on identical features.  A fourth
section compares the numba and numpy kernel backends when both are
importable.
"""

import time

import numpy as np

from . import kernels
from .analytic import AnalyticState, LabelMatrix, crls_update
from .errors import NumericError


def _fresh_state(d, n_classes, gamma=1.0):
    # psi of an empty model is (gamma I)^-1; phi starts at zero
    return AnalyticState(
        phi=np.zeros((d, n_classes)),
        psi=np.eye(d) / gamma,
        gamma=gamma,
        class_ids=list(range(n_classes)),
    )


def _random_batch(rng, n, d, n_classes):
    feats = rng.standard_normal((n, d))
    labels = LabelMatrix.from_labels(rng.integers(0, n_classes, n), list(range(n_classes)))
    return feats, labels


def time_update_modes(sizes, n_rows, n_classes=8, seed=0, repeats=1):
    """Wall time of one update per (d_expanded, mode)."""
    rng = np.random.default_rng(seed)
    warm_state = _fresh_state(min(sizes), n_classes)
    warm_feats, warm_labels = _random_batch(rng, n_rows, min(sizes), n_classes)
    for mode in ("direct", "woodbury"):  # spin up BLAS pools before timing
        crls_update(warm_state, warm_feats, warm_labels, mode=mode)
    rows = []
    for d in sizes:
        state = _fresh_state(d, n_classes)
        feats, labels = _random_batch(rng, n_rows, d, n_classes)
        entry = {"d_expanded": int(d), "n_rows": int(n_rows)}
        for mode in ("direct", "woodbury"):
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                crls_update(state, feats, labels, mode=mode)
                best = min(best, time.perf_counter() - t0)
            entry[mode] = best
        rows.append(entry)
    return rows


def fit_cubic(sizes, times):
    """Least-squares fit t = a d^3 + b and its R^2."""
    sizes = np.asarray(sizes, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    x = np.stack([sizes**3, np.ones_like(sizes)], axis=1)
    coef, *_ = np.linalg.lstsq(x, times, rcond=None)
    pred = x @ coef
    ss_res = float(((times - pred) ** 2).sum())
    ss_tot = float(((times - times.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return {"a": float(coef[0]), "b": float(coef[1]), "r2": r2}


def sgd_reference(features, label_columns, n_classes, epochs=10, batch_size=32,
                  lr=0.01, momentum=0.9, seed=0):
    """Conventional minibatch-SGD linear classifier (softmax + CE).

    Shuffled minibatches, momentum SGD, float64, trained on exactly
    the features the recursive update consumes.  Returns the weight
    matrix and the wall time of the full training loop.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    cols = np.asarray(label_columns, dtype=np.int64)
    n, d = x.shape
    y = np.zeros((n, n_classes))
    y[np.arange(n), cols] = 1.0
    rng = np.random.default_rng(seed)
    w = np.zeros((d, n_classes))
    vel = np.zeros_like(w)
    t0 = time.perf_counter()
    for _ in range(epochs):
        order = rng.permutation(n)
        for s in range(0, n, batch_size):
            idx = order[s:s + batch_size]
            xb, yb = x[idx], y[idx]
            logits = xb @ w
            logits -= logits.max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            grad = xb.T @ (p - yb) / idx.shape[0]
            vel = momentum * vel - lr * grad
            w += vel
    elapsed = time.perf_counter() - t0
    return w, elapsed


def single_pass_comparison(d_expanded=4096, n_rows=8192, n_classes=21,
                           sgd_epochs=10, sgd_batch=32, seed=0):
    """One recursive pass vs a 10-epoch SGD reference on the same features."""
    rng = np.random.default_rng(seed)
    state = _fresh_state(d_expanded, n_classes)
    feats = rng.standard_normal((n_rows, d_expanded))
    cols = rng.integers(0, n_classes, n_rows)
    labels = LabelMatrix.from_labels(cols, list(range(n_classes)))

    t0 = time.perf_counter()
    crls_update(state, feats, labels, mode="auto")
    crls_time = time.perf_counter() - t0

    _, sgd_time = sgd_reference(
        feats, cols, n_classes, epochs=sgd_epochs, batch_size=sgd_batch, seed=seed
    )
    return {
        "d_expanded": int(d_expanded),
        "n_rows": int(n_rows),
        "n_classes": int(n_classes),
        "single_pass_s": crls_time,
        "sgd_epochs": int(sgd_epochs),
        "sgd_batch": int(sgd_batch),
        "sgd_total_s": sgd_time,
        "speedup": sgd_time / crls_time,
    }


def compare_kernel_backends(n_points=4096, k=8, n_classes=8, seed=0):
    """Per-backend wall times for the KNN and BALD kernels."""
    rng = np.random.default_rng(seed)
    coords = rng.standard_normal((n_points, 3)) + 4.0
    probs = rng.dirichlet(np.ones(n_classes), n_points)
    out = {"n_points": int(n_points), "k": int(k), "backends": {}}
    for backend in kernels.available_backends():
        knn = kernels.get_impl("knn", backend)
        bald = kernels.get_impl("bald", backend)
        idx, _, w = knn(coords, k)  # warm the JIT before timing
        t0 = time.perf_counter()
        idx, _, w = knn(coords, k)
        knn_time = time.perf_counter() - t0
        bald(probs, idx, w)
        t0 = time.perf_counter()
        bald(probs, idx, w)
        bald_time = time.perf_counter() - t0
        out["backends"][backend] = {"knn_s": knn_time, "bald_s": bald_time}
    return out


def run_bench(sizes=(256, 512, 1024), n_rows=128, n_classes=8, seed=0,
              single_pass=False, kernels_section=False, sp_rows=8192):
    """Assemble the full benchmark report.

    Raises NumericError if the Woodbury form fails to beat the direct
    form on the largest configured width with a small batch.
    """
    report = {"update_modes": time_update_modes(sizes, n_rows, n_classes, seed)}
    report["cubic_fit_direct"] = fit_cubic(
        [r["d_expanded"] for r in report["update_modes"]],
        [r["direct"] for r in report["update_modes"]],
    )
    largest = report["update_modes"][-1]
    report["woodbury_beats_direct_at_largest"] = largest["woodbury"] < largest["direct"]
    if n_rows < largest["d_expanded"] and not report["woodbury_beats_direct_at_largest"]:
        raise NumericError(
            f"woodbury ({largest['woodbury']:.4f}s) did not beat direct "
            f"({largest['direct']:.4f}s) at d={largest['d_expanded']}, n={n_rows}"
        )
    if single_pass:
        report["single_pass"] = single_pass_comparison(n_rows=sp_rows, seed=seed)
    if kernels_section:
        report["kernels"] = compare_kernel_backends(seed=seed)
    return report

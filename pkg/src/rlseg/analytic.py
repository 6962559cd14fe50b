"""Closed-form multiclass ridge classifier with a recursive update.

The learner keeps two matrices: the classifier ``phi`` (d x C) and
``psi`` (d x d), the inverse of the regularized feature
auto-correlation (sum of E_s^T E_s over every absorbed batch, plus
gamma * I).  A batch fit solves the ridge normal equations; the
recursive update absorbs a new batch using only (phi, psi, batch),
never the historical rows, and reproduces the batch solution exactly
(to float64 roundoff).  New classes enter as zero columns before an
update.

All arithmetic is float64 regardless of the on-disk feature dtype:
the chained inversions amplify roundoff too much for float32.
Inverses are realized through Cholesky solves, never adjugates, and
psi is re-symmetrized after every update so asymmetric rounding
cannot compound across a long run.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import DataError, NumericError

IGNORE = -1  # label value marking rows excluded from regression and scoring

CHECKPOINT_FORMAT = "rlseg-checkpoint-1"


@dataclass
class LabelMatrix:
    """One-hot label rows in sparse form.

    ``columns[i]`` is the class-column index of row i, or IGNORE for
    rows that carry no supervision.  Column j corresponds to
    ``class_ids[j]``; a materialized row therefore has exactly one 1.
    """

    class_ids: list
    columns: np.ndarray

    def __post_init__(self):
        self.columns = np.asarray(self.columns, dtype=np.int64)
        if len(set(self.class_ids)) != len(self.class_ids):
            raise DataError(f"duplicate class ids in {self.class_ids}")
        bad = (self.columns != IGNORE) & (
            (self.columns < 0) | (self.columns >= len(self.class_ids))
        )
        if bad.any():
            raise DataError(
                f"label rows reference columns outside 0..{len(self.class_ids) - 1}"
            )

    @classmethod
    def from_labels(cls, labels, class_ids):
        """Map raw class ids to columns; IGNORE passes through."""
        labels = np.asarray(labels, dtype=np.int64)
        class_ids = [int(c) for c in class_ids]
        columns = np.full(labels.shape[0], IGNORE, dtype=np.int64)
        keep = labels != IGNORE
        ids = np.asarray(class_ids, dtype=np.int64)
        order = np.argsort(ids, kind="stable")
        pos = np.searchsorted(ids[order], labels[keep])
        pos = np.clip(pos, 0, len(ids) - 1)
        hit = ids[order][pos] == labels[keep]
        if not hit.all():
            missing = np.unique(labels[keep][~hit])
            raise DataError(f"label ids {missing.tolist()} not in class set {class_ids}")
        columns[keep] = order[pos]
        return cls(class_ids=class_ids, columns=columns)

    @property
    def n_rows(self):
        return int(self.columns.shape[0])

    @property
    def n_cols(self):
        return len(self.class_ids)

    def kept_mask(self):
        return self.columns != IGNORE

    def dense(self, mask=None):
        """Materialize one-hot float64 rows (ignored rows must be masked out)."""
        cols = self.columns if mask is None else self.columns[mask]
        if (cols == IGNORE).any():
            raise DataError("cannot densify ignored label rows")
        y = np.zeros((cols.shape[0], self.n_cols), dtype=np.float64)
        y[np.arange(cols.shape[0]), cols] = 1.0
        return y


@dataclass
class AnalyticState:
    """Classifier matrix, inverse auto-correlation, and class registry."""

    phi: np.ndarray  # d x C float64
    psi: np.ndarray  # d x d float64
    gamma: float
    class_ids: list
    step_index: int = 1

    @property
    def d_expanded(self):
        return int(self.phi.shape[0])

    @property
    def n_classes(self):
        return len(self.class_ids)

    def copy(self):
        return AnalyticState(
            phi=self.phi.copy(),
            psi=self.psi.copy(),
            gamma=self.gamma,
            class_ids=list(self.class_ids),
            step_index=self.step_index,
        )


def _check_features(features, d_expanded=None):
    e = np.ascontiguousarray(features, dtype=np.float64)
    if e.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {e.shape}")
    if d_expanded is not None and e.shape[1] != d_expanded:
        raise DataError(
            f"feature width {e.shape[1]} does not match classifier width {d_expanded}"
        )
    if not np.isfinite(e).all():
        raise NumericError("non-finite values in feature matrix")
    return e


def _spd_inverse(a):
    """Cholesky-based inverse of a symmetric positive-definite matrix."""
    try:
        c = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NumericError(f"SPD factorization failed: {err}") from err
    return scipy.linalg.cho_solve(c, np.eye(a.shape[0]), check_finite=False)


def _spd_solve(a, b):
    try:
        c = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NumericError(f"SPD factorization failed: {err}") from err
    return scipy.linalg.cho_solve(c, b, check_finite=False)


def _symmetrize(a):
    return (a + a.T) * 0.5


def fit_initial(features, labels: LabelMatrix, gamma: float) -> AnalyticState:
    """Batch ridge solution over one fully labeled batch.

    phi = (E^T E + gamma I)^-1 E^T Y and psi = (E^T E + gamma I)^-1,
    both through a Cholesky solve.  Ignored label rows are dropped
    from E and Y before any linear algebra.
    """
    if not gamma > 0.0:
        raise DataError(f"gamma must be > 0, got {gamma}")
    e = _check_features(features)
    if labels.n_rows != e.shape[0]:
        raise DataError(
            f"{e.shape[0]} feature rows vs {labels.n_rows} label rows"
        )
    mask = labels.kept_mask()
    e = e[mask]
    if e.shape[0] == 0:
        raise DataError("no labeled rows to fit")
    y = labels.dense(mask)
    a = e.T @ e
    a[np.diag_indices_from(a)] += gamma
    phi = _spd_solve(a, e.T @ y)
    psi = _symmetrize(_spd_inverse(a))
    return AnalyticState(
        phi=phi, psi=psi, gamma=float(gamma), class_ids=list(labels.class_ids), step_index=1
    )


def expand_classes(state: AnalyticState, new_class_ids) -> AnalyticState:
    """Register new classes as zero columns; psi is untouched."""
    new_class_ids = [int(c) for c in new_class_ids]
    if not new_class_ids:
        return state
    if len(set(new_class_ids)) != len(new_class_ids):
        raise DataError(f"duplicate ids in {new_class_ids}")
    clash = set(new_class_ids) & set(state.class_ids)
    if clash:
        raise DataError(f"class ids already registered: {sorted(clash)}")
    zeros = np.zeros((state.d_expanded, len(new_class_ids)), dtype=np.float64)
    return replace(
        state,
        phi=np.hstack([state.phi, zeros]),
        class_ids=list(state.class_ids) + new_class_ids,
    )


def crls_update(state: AnalyticState, features, labels: LabelMatrix, mode: str = "auto") -> AnalyticState:
    """Absorb one batch recursively.

    psi_new = (psi^-1 + E^T E)^-1, realized either directly (two SPD
    solves) or through the Woodbury identity
    psi - psi E^T (I + E psi E^T)^-1 E psi, which is cheaper when the
    batch has fewer rows than feature columns; mode "auto" picks by
    that comparison.  phi_new = phi + psi_new E^T (Y - E phi), the
    residual-form equivalent of the covered/uncovered block update
    (new-class columns of phi are zero, so their block reduces to
    psi_new E^T Y_new).
    """
    if mode not in ("direct", "woodbury", "auto"):
        raise DataError(f"mode must be direct|woodbury|auto, got {mode!r}")
    e = _check_features(features, state.d_expanded)
    if labels.n_rows != e.shape[0]:
        raise DataError(f"{e.shape[0]} feature rows vs {labels.n_rows} label rows")
    if labels.class_ids != list(state.class_ids):
        raise DataError(
            f"label columns {labels.class_ids} do not match state classes "
            f"{list(state.class_ids)}; call expand_classes first"
        )
    mask = labels.kept_mask()
    e = e[mask]
    n = e.shape[0]
    if n == 0:
        return replace(state, step_index=state.step_index + 1)
    y = labels.dense(mask)

    if mode == "auto":
        mode = "woodbury" if n < state.d_expanded else "direct"
    if mode == "direct":
        inv_prev = _spd_inverse(state.psi)
        a = inv_prev + e.T @ e
        psi = _symmetrize(_spd_inverse(a))
    else:
        g = e @ state.psi  # n x d
        k = g @ e.T
        k[np.diag_indices_from(k)] += 1.0
        psi = _symmetrize(state.psi - g.T @ _spd_solve(k, g))

    resid = y - e @ state.phi
    phi = state.phi + psi @ (e.T @ resid)
    return replace(state, phi=phi, psi=psi, step_index=state.step_index + 1)


def predict(state: AnalyticState, features):
    """Logits E @ phi and argmax class ids; ties go to the lowest column."""
    e = _check_features(features, state.d_expanded)
    logits = e @ state.phi
    cols = np.argmax(logits, axis=1)  # first occurrence = lowest column index
    ids = np.asarray(state.class_ids, dtype=np.int64)[cols]
    return logits, ids


# ---------------------------------------------------------------------------
# checkpoint codec: one JSON header line, then raw little-endian float64
# payloads for phi and psi, row-major.  Round-trips bit-exactly.
# ---------------------------------------------------------------------------

def save_checkpoint(state: AnalyticState, path):
    header = {
        "format": CHECKPOINT_FORMAT,
        "d_expanded": state.d_expanded,
        "n_classes": state.n_classes,
        "gamma": state.gamma,
        "class_ids": [int(c) for c in state.class_ids],
        "step_index": int(state.step_index),
        "byte_order": "little",
        "dtype": "float64",
    }
    phi = np.ascontiguousarray(state.phi, dtype="<f8")
    psi = np.ascontiguousarray(state.psi, dtype="<f8")
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(phi.tobytes(order="C"))
        f.write(psi.tobytes(order="C"))


def load_checkpoint(path) -> AnalyticState:
    with open(path, "rb") as f:
        try:
            header = json.loads(f.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise DataError(f"unreadable checkpoint header in {path}: {err}") from err
        if header.get("format") != CHECKPOINT_FORMAT:
            raise DataError(f"{path} is not a {CHECKPOINT_FORMAT} file")
        d = int(header["d_expanded"])
        c = int(header["n_classes"])
        phi_bytes = f.read(d * c * 8)
        psi_bytes = f.read(d * d * 8)
        trailing = f.read(1)
    if len(phi_bytes) != d * c * 8 or len(psi_bytes) != d * d * 8 or trailing:
        raise DataError(f"checkpoint payload size mismatch in {path}")
    phi = np.frombuffer(phi_bytes, dtype="<f8").reshape(d, c).astype(np.float64)
    psi = np.frombuffer(psi_bytes, dtype="<f8").reshape(d, d).astype(np.float64)
    return AnalyticState(
        phi=phi,
        psi=psi,
        gamma=float(header["gamma"]),
        class_ids=[int(x) for x in header["class_ids"]],
        step_index=int(header["step_index"]),
    )

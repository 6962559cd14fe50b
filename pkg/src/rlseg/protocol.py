"""Class-incremental protocol driver.

Builds m-n class schedules, masks labels per learning setting
(sequential / disjoint / overlapped), generates deterministic
synthetic streams, and runs the incremental loop: expand features,
pseudo-label drifted background, register new classes, absorb the
step recursively, score against the held-out split.

Class ids are 0..n_classes-1 with 0 reserved for background.  The
base step covers the first m ids (background included); each later
step introduces the next n ids.  A fully labeled evaluation split is
scored after every step over the classes seen so far.
"""

import dataclasses
import json
import time
from dataclasses import dataclass

import numpy as np

from .analytic import (
    IGNORE,
    AnalyticState,
    LabelMatrix,
    crls_update,
    expand_classes,
    fit_initial,
    predict,
)
from .errors import ConfigError, DataError, NumericError
from .expansion import RhlProjector, build_projector, expand
from .metrics import SegMetrics, confusion_accumulate, iou_from_confusion
from .pseudo2d import relabel_2d
from .pseudo3d import knn_cosine, relabel_3d

SETTINGS = ("sequential", "disjoint", "overlapped")
MODALITIES = ("2d", "3d")
UPDATE_MODES = ("direct", "woodbury", "auto")

# drift/revisit pools are this fraction of a class's main pool
DRIFT_FRACTION = 4

TAU_DEFAULTS = {"2d": 0.4, "3d": 0.0035}


@dataclass
class StepBatch:
    """One incremental step's raw (pre-expansion) data."""

    features: np.ndarray  # n x d_encoder
    raw_labels: np.ndarray  # n, already masked for the setting
    step_index: int
    new_classes: list
    coords: np.ndarray = None  # n x 3, 3D streams only


@dataclass
class RunConfig:
    """Everything a run needs; serializes losslessly as the run manifest."""

    setting: str = "sequential"
    modality: str = "2d"
    n_classes: int = 6
    m: int = 3
    n: int = 1
    d_encoder: int = 8
    d_expanded: int = 64
    points_per_class: int = 80
    cluster_spread: float = 0.1
    seed: int = 0
    gamma: float = 1.0
    tau: float = None  # None -> modality default
    k_neighbors: int = 8
    scale: float = 1.0
    chunk_rows: int = 65536
    mode: str = "auto"
    threads: int = 0  # 0 -> leave BLAS pool untouched
    background_id: int = 0
    stream_dir: str = ""
    checkpoint_path: str = ""
    metrics_path: str = ""

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ConfigError(f"setting must be one of {SETTINGS}, got {self.setting!r}")
        if self.modality not in MODALITIES:
            raise ConfigError(f"modality must be one of {MODALITIES}, got {self.modality!r}")
        if self.mode not in UPDATE_MODES:
            raise ConfigError(f"mode must be one of {UPDATE_MODES}, got {self.mode!r}")
        if self.n_classes < 2:
            raise ConfigError(f"need n_classes >= 2 (background + 1), got {self.n_classes}")
        if not 1 <= self.m <= self.n_classes:
            raise ConfigError(f"m must lie in 1..{self.n_classes}, got {self.m}")
        if self.m < self.n_classes and self.n < 1:
            raise ConfigError(f"n must be >= 1 when increments remain, got {self.n}")
        if self.tau is None:
            self.tau = TAU_DEFAULTS[self.modality]
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.d_encoder < 1 or self.d_expanded < 1 or self.points_per_class < 1:
            raise ConfigError("dimensions and points_per_class must be >= 1")
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.background_id != 0:
            raise ConfigError("background_id is fixed at 0 in this protocol")

    def to_manifest(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_manifest(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(**data)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_manifest(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_manifest(json.load(f))


def class_schedule(n_classes, m, n):
    """Step class lists: first m ids, then chunks of n, ids ascending."""
    if not 1 <= m <= n_classes:
        raise ConfigError(f"m must lie in 1..{n_classes}, got {m}")
    steps = [list(range(m))]
    at = m
    while at < n_classes:
        if n < 1:
            raise ConfigError(f"n must be >= 1 to cover classes {at}..{n_classes - 1}")
        steps.append(list(range(at, min(at + n, n_classes))))
        at += n
    return steps


def seen_classes(schedule, t):
    """All class ids introduced in steps 1..t."""
    out = []
    for s in schedule[:t]:
        out.extend(s)
    return out


def mask_labels(full_labels, setting, schedule, t, background_id=0):
    """Rewrite true labels into what step t may observe.

    sequential: classes seen so far keep their labels, future classes
    become IGNORE.  disjoint: current classes keep, past classes fall
    to background, future classes are a protocol violation (the
    generator must not emit them).  overlapped: current classes keep,
    everything else falls to background.
    """
    labels = np.asarray(full_labels, dtype=np.int64)
    if setting not in SETTINGS:
        raise ConfigError(f"unknown setting {setting!r}")
    all_ids = set(seen_classes(schedule, len(schedule)))
    unknown = set(int(c) for c in np.unique(labels)) - all_ids - {IGNORE}
    if unknown:
        raise DataError(f"labels {sorted(unknown)} missing from the class schedule")
    current = np.asarray(schedule[t - 1], dtype=np.int64)
    seen = np.asarray(seen_classes(schedule, t), dtype=np.int64)

    out = labels.copy()
    if setting == "sequential":
        future = ~np.isin(labels, seen) & (labels != IGNORE)
        out[future] = IGNORE
    elif setting == "disjoint":
        past = np.isin(labels, seen) & ~np.isin(labels, current)
        future = ~np.isin(labels, seen) & (labels != IGNORE)
        if future.any():
            bad = np.unique(labels[future])
            raise DataError(
                f"disjoint step {t} contains future classes {bad.tolist()}; "
                "they must be excluded upstream"
            )
        out[past] = background_id
    else:  # overlapped
        other = ~np.isin(labels, current) & (labels != IGNORE)
        out[other] = background_id
    return out


# ---------------------------------------------------------------------------
# synthetic stream generation
# ---------------------------------------------------------------------------

def _class_rng(seed, purpose, class_id):
    return np.random.default_rng([int(seed), int(purpose), int(class_id)])


def _class_centers(n_classes, d_encoder, seed):
    """Well-separated cluster centers, deterministic under seed.

    With d_encoder >= n_classes the centers sit on the scaled standard
    basis (a unit simplex scaled by 10); otherwise random directions
    of norm 10 are drawn.
    """
    if d_encoder >= n_classes:
        centers = np.zeros((n_classes, d_encoder))
        centers[np.arange(n_classes), np.arange(n_classes)] = 10.0
        return centers
    g = _class_rng(seed, 0, 0).standard_normal((n_classes, d_encoder))
    return 10.0 * g / np.linalg.norm(g, axis=1, keepdims=True)


def _coord_center(class_id):
    # spread class clusters over a coarse 3-D grid away from the origin
    return np.array(
        [2.0 + 3.0 * (class_id % 3), 2.0 + 3.0 * ((class_id // 3) % 3), 2.0 + 3.0 * (class_id // 9)]
    )


_POOL_MAIN, _POOL_DRIFT, _POOL_EVAL = 1, 2, 3


def _draw_pool(config, centers, class_id, purpose, count):
    rng = _class_rng(config.seed, purpose, class_id)
    feats = centers[class_id] + config.cluster_spread * rng.standard_normal(
        (count, config.d_encoder)
    )
    coords = None
    if config.modality == "3d":
        coords = _coord_center(class_id) + 0.3 * rng.standard_normal((count, 3))
    return feats, coords


def synth_generate(config: RunConfig):
    """Deterministic synthetic stream plus a fully labeled eval split.

    Per class: a main pool (points_per_class rows) lands in the step
    that introduces the class; a smaller drift pool revisits later
    steps in the disjoint/overlapped settings (past classes in every
    later step, plus next-step classes in overlapped) so background
    collapse actually occurs; an eval pool goes to the held-out split.
    Pools depend only on (seed, class, purpose), never on the
    schedule, so regrouping the same classes into different step
    sizes replays the identical rows.
    """
    schedule = class_schedule(config.n_classes, config.m, config.n)
    centers = _class_centers(config.n_classes, config.d_encoder, config.seed)
    drift_count = max(1, config.points_per_class // DRIFT_FRACTION)

    main = {c: _draw_pool(config, centers, c, _POOL_MAIN, config.points_per_class)
            for c in range(config.n_classes)}
    drift = {c: _draw_pool(config, centers, c, _POOL_DRIFT, drift_count)
             for c in range(config.n_classes)}

    batches = []
    for t, step_ids in enumerate(schedule, start=1):
        parts = [(main[c], c) for c in step_ids]
        if config.setting in ("disjoint", "overlapped") and t > 1:
            for c in seen_classes(schedule, t - 1):
                parts.append((drift[c], c))
        if config.setting == "overlapped" and t < len(schedule):
            for c in schedule[t]:
                parts.append((drift[c], c))
        feats = np.vstack([p[0][0] for p in parts])
        true_labels = np.concatenate(
            [np.full(p[0][0].shape[0], p[1], dtype=np.int64) for p in parts]
        )
        coords = (
            np.vstack([p[0][1] for p in parts]) if config.modality == "3d" else None
        )
        masked = mask_labels(true_labels, config.setting, schedule, t, config.background_id)
        batches.append(
            StepBatch(
                features=feats,
                raw_labels=masked,
                step_index=t,
                new_classes=list(step_ids),
                coords=coords,
            )
        )

    eval_count = max(1, config.points_per_class // 2)
    eval_parts = [
        (_draw_pool(config, centers, c, _POOL_EVAL, eval_count), c)
        for c in range(config.n_classes)
    ]
    eval_feats = np.vstack([p[0][0] for p in eval_parts])
    eval_labels = np.concatenate(
        [np.full(p[0][0].shape[0], p[1], dtype=np.int64) for p in eval_parts]
    )
    eval_coords = (
        np.vstack([p[0][1] for p in eval_parts]) if config.modality == "3d" else None
    )
    return batches, (eval_feats, eval_labels, eval_coords)


# ---------------------------------------------------------------------------
# the incremental loop
# ---------------------------------------------------------------------------

def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    return p


def _assert_no_leak(labels, allowed_ids, t):
    present = set(int(c) for c in np.unique(labels)) - {IGNORE}
    leak = present - set(int(c) for c in allowed_ids)
    if leak:
        raise DataError(f"step {t}: training labels leak unseen classes {sorted(leak)}")


def evaluate_state(state: AnalyticState, eval_expanded, eval_labels, base_ids,
                   background_id=0) -> SegMetrics:
    """Score the current model on the held-out split over seen classes.

    Ground-truth labels outside the classes seen so far are ignored,
    so each step is scored on the classes it could know about.
    """
    gt = np.asarray(eval_labels, dtype=np.int64)
    seen = np.asarray(state.class_ids, dtype=np.int64)
    gt = np.where(np.isin(gt, seen), gt, IGNORE)

    _, pred_ids = predict(state, eval_expanded)

    # score in column space, then report by class id
    gt_cols = LabelMatrix.from_labels(gt, state.class_ids).columns
    pred_cols = LabelMatrix.from_labels(pred_ids, state.class_ids).columns
    confusion = confusion_accumulate(pred_cols, gt_cols, state.n_classes)

    # iou_from_confusion indexes the matrix by class_ids order
    return iou_from_confusion(confusion, state.class_ids, base_ids, background_id)


def fit_first_step(config: RunConfig, batch: StepBatch, projector: RhlProjector) -> AnalyticState:
    """Expand and batch-fit step 1."""
    if batch.step_index != 1:
        raise DataError(f"first batch must have step_index 1, got {batch.step_index}")
    try:
        expanded = expand(projector, batch.features, config.chunk_rows)
        labels = LabelMatrix.from_labels(batch.raw_labels, batch.new_classes)
        return fit_initial(expanded, labels, config.gamma)
    except NumericError as err:
        raise NumericError(f"step 1: {err}") from err


def run_steps(config: RunConfig, batches, state: AnalyticState, eval_data,
              projector: RhlProjector):
    """Drive steps 2..T; returns (final state, per-step SegMetrics list).

    Each batch is expanded, background labels are resolved against
    the frozen previous model (disjoint/overlapped only; sequential
    labels are already complete), new classes enter as zero columns,
    and the step is absorbed in a single recursive update.
    """
    eval_feats, eval_labels, _ = eval_data
    eval_expanded = expand(projector, eval_feats, config.chunk_rows)
    base_ids = class_schedule(config.n_classes, config.m, config.n)[0]

    per_step = []
    wall = time.perf_counter()
    metrics = evaluate_state(state, eval_expanded, eval_labels,
                             base_ids, config.background_id)
    per_step.append((state.step_index, metrics, time.perf_counter() - wall))

    for batch in batches:
        if batch.step_index != state.step_index + 1:
            raise DataError(
                f"batch step {batch.step_index} does not follow state step {state.step_index}"
            )
        overlap = set(batch.new_classes) & set(state.class_ids)
        if overlap:
            raise DataError(
                f"step {batch.step_index} reintroduces classes {sorted(overlap)}"
            )
        wall = time.perf_counter()
        try:
            expanded = expand(projector, batch.features, config.chunk_rows)

            if config.setting == "sequential":
                resolved = np.asarray(batch.raw_labels, dtype=np.int64)
            else:
                logits, _ = predict(state, expanded)
                if config.modality == "3d":
                    if batch.coords is None:
                        raise ConfigError(
                            f"step {batch.step_index}: 3d relabeling requires coordinates"
                        )
                    neighborhoods = knn_cosine(batch.coords, config.k_neighbors)
                    resolved = relabel_3d(
                        batch.raw_labels, softmax(logits), neighborhoods,
                        state.class_ids, batch.new_classes,
                        config.background_id, config.tau,
                    )
                else:
                    resolved = relabel_2d(
                        batch.raw_labels, logits, state.class_ids,
                        batch.new_classes, config.background_id, config.tau,
                    )

            state = expand_classes(state, batch.new_classes)
            _assert_no_leak(resolved, state.class_ids, batch.step_index)
            labels = LabelMatrix.from_labels(resolved, state.class_ids)
            state = crls_update(state, expanded, labels, config.mode)
        except NumericError as err:
            raise NumericError(f"step {batch.step_index}: {err}") from err
        if not np.isfinite(state.phi).all():
            raise NumericError(
                f"step {batch.step_index}: classifier went non-finite after update"
            )

        metrics = evaluate_state(state, eval_expanded, eval_labels,
                                 base_ids, config.background_id)
        per_step.append((batch.step_index, metrics, time.perf_counter() - wall))
    return state, per_step


def run_from_config(config: RunConfig, batches, eval_data):
    """Full pipeline: projector, step-1 fit, incremental loop."""
    if not batches:
        raise DataError("empty stream")
    projector = build_projector(config.seed, config.d_encoder, config.d_expanded, config.scale)
    state = fit_first_step(config, batches[0], projector)
    return run_steps(config, batches[1:], state, eval_data, projector)

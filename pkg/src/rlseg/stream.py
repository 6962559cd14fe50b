"""CFS1 feature-stream codec.

One incremental step is stored as a pair of files:

  step_NNNN.json   sidecar: {"step", "n_rows", "d_encoder",
                   "has_coords", "class_ids_present"}
  step_NNNN.bin    8-byte magic b"CFS1FEAT", then row-major
                   little-endian payloads in order:
                     features  n_rows x d_encoder  float32
                     coords    n_rows x 3          float32  (only if has_coords)
                     labels    n_rows              int32

The held-out evaluation split uses the reserved step number 0
(files eval.json / eval.bin).  Payloads round-trip bit-exactly.
"""

import json
import os

import numpy as np

from .analytic import IGNORE
from .errors import DataError

MAGIC = b"CFS1FEAT"

_SIDECAR_KEYS = {"step", "n_rows", "d_encoder", "has_coords", "class_ids_present"}


def _names(step):
    return ("eval.json", "eval.bin") if step == 0 else (
        f"step_{step:04d}.json",
        f"step_{step:04d}.bin",
    )


def step_paths(directory, step):
    j, b = _names(step)
    return os.path.join(directory, j), os.path.join(directory, b)


def write_step(directory, step, features, labels, coords=None, class_ids_present=None):
    """Write one step; features/coords are stored as float32, labels as int32."""
    features = np.ascontiguousarray(features, dtype="<f4")
    labels = np.ascontiguousarray(labels, dtype="<i4")
    if features.ndim != 2:
        raise DataError(f"features must be 2-D, got shape {features.shape}")
    if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
        raise DataError(
            f"labels shape {labels.shape} does not match {features.shape[0]} rows"
        )
    if coords is not None:
        coords = np.ascontiguousarray(coords, dtype="<f4")
        if coords.shape != (features.shape[0], 3):
            raise DataError(f"coords must be N x 3, got shape {coords.shape}")
    if class_ids_present is None:
        class_ids_present = sorted(int(c) for c in np.unique(labels) if c != IGNORE)
    sidecar = {
        "step": int(step),
        "n_rows": int(features.shape[0]),
        "d_encoder": int(features.shape[1]),
        "has_coords": coords is not None,
        "class_ids_present": [int(c) for c in class_ids_present],
    }
    json_path, bin_path = step_paths(directory, step)
    os.makedirs(directory, exist_ok=True)
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(bin_path, "wb") as f:
        f.write(MAGIC)
        f.write(features.tobytes(order="C"))
        if coords is not None:
            f.write(coords.tobytes(order="C"))
        f.write(labels.tobytes(order="C"))
    return json_path, bin_path


def read_step(directory, step):
    """Read one step back: (features f32, labels i32, coords f32 | None, sidecar)."""
    json_path, bin_path = step_paths(directory, step)
    for p in (json_path, bin_path):
        if not os.path.exists(p):
            raise DataError(f"missing stream file {p}")
    with open(json_path, "r", encoding="utf-8") as f:
        sidecar = json.load(f)
    if set(sidecar) != _SIDECAR_KEYS:
        raise DataError(
            f"sidecar {json_path} keys {sorted(sidecar)} != {sorted(_SIDECAR_KEYS)}"
        )
    n, d = int(sidecar["n_rows"]), int(sidecar["d_encoder"])
    has_coords = bool(sidecar["has_coords"])
    with open(bin_path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise DataError(f"{bin_path} lacks the CFS1FEAT magic header")
        feat = np.frombuffer(f.read(n * d * 4), dtype="<f4")
        coords = np.frombuffer(f.read(n * 3 * 4), dtype="<f4") if has_coords else None
        labels = np.frombuffer(f.read(n * 4), dtype="<i4")
        trailing = f.read(1)
    if feat.size != n * d or labels.size != n or (has_coords and coords.size != n * 3):
        raise DataError(f"{bin_path} payload truncated")
    if trailing:
        raise DataError(f"{bin_path} has trailing bytes after the labels payload")
    feat = feat.reshape(n, d)
    if has_coords:
        coords = coords.reshape(n, 3)
    return feat, labels.astype(np.int64), coords, sidecar


def list_steps(directory):
    """Training step numbers present in a stream directory, ascending."""
    steps = []
    for name in os.listdir(directory):
        if name.startswith("step_") and name.endswith(".json"):
            steps.append(int(name[len("step_"):-len(".json")]))
    return sorted(steps)


def check_stream(directory):
    """Validate every step pair in a directory; returns a report dict.

    Checks: magic and payload sizes, finite float payloads, labels
    contained in class_ids_present plus IGNORE, eval split present.
    """
    problems = []
    steps = list_steps(directory)
    if not steps:
        problems.append("no step files found")
    for step in steps + ([0] if os.path.exists(step_paths(directory, 0)[0]) else []):
        try:
            feat, labels, coords, sidecar = read_step(directory, step)
        except DataError as err:
            problems.append(str(err))
            continue
        name = _names(step)[1]
        if not np.isfinite(feat).all():
            problems.append(f"{name}: non-finite feature values")
        if coords is not None and not np.isfinite(coords).all():
            problems.append(f"{name}: non-finite coordinates")
        declared = set(sidecar["class_ids_present"]) | {IGNORE}
        present = set(int(c) for c in np.unique(labels))
        if not present <= declared:
            problems.append(
                f"{name}: labels {sorted(present - declared)} missing from sidecar"
            )
    return {"directory": str(directory), "steps": steps, "ok": not problems, "problems": problems}

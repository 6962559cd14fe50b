"""Random-feature expansion: a fixed random linear layer followed by ReLU.

Encoder features (N x d_encoder) are lifted to a wide space
(N x d_expanded) through a frozen weight matrix drawn once from
N(0, scale^2).  Widening makes the feature stream more linearly
separable for the closed-form classifier downstream.

Weight generation is counter-based so that entry (i, j) is a pure
function of (seed, i, j), reproducible bit-for-bit across runs and
platforms:

    h0      = splitmix64(seed XOR 0xA0761D6478BD642F)
    k1      = splitmix64(h0 XOR (i * d_expanded + j))
    k2      = splitmix64(k1 XOR 0xE7037ED1A0B428DB)
    u1, u2  = ((k >> 11) + 0.5) * 2^-53          for k in (k1, k2)
    w[i,j]  = scale * sqrt(-2 ln u1) * cos(2 pi u2)

splitmix64 is the standard finalizer (Steele et al.); u1, u2 lie
strictly inside (0, 1) so the Box-Muller transform never sees 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_SEED_SALT = _U64(0xA0761D6478BD642F)
_STREAM_SALT = _U64(0xE7037ED1A0B428DB)


def _splitmix64(x):
    with np.errstate(over="ignore"):
        x = (x + _GOLDEN).astype(np.uint64)
        x = (x ^ (x >> _U64(30))) * _MIX1
        x = (x ^ (x >> _U64(27))) * _MIX2
        return x ^ (x >> _U64(31))


def counter_normals(seed, n, offset=0):
    """N(0,1) draws where draw ``offset + t`` depends only on (seed, offset + t)."""
    flat = np.arange(offset, offset + n, dtype=np.uint64)
    h0 = _splitmix64(np.asarray(_U64(seed) ^ _SEED_SALT))
    k1 = _splitmix64(h0 ^ flat)
    k2 = _splitmix64(k1 ^ _STREAM_SALT)
    u1 = ((k1 >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u2 = ((k2 >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class RhlProjector:
    """Frozen random projection: weights, the seed that built them, dims."""

    weights: np.ndarray  # d_encoder x d_expanded, float64
    seed: int
    d_encoder: int
    d_expanded: int


def build_projector(seed: int, d_encoder: int, d_expanded: int, scale: float = 1.0) -> RhlProjector:
    """Deterministically build the random expansion layer.

    Entry [i, j] is a pure function of (seed, i, j); rebuilding with
    the same arguments yields bitwise-identical weights.
    """
    if d_encoder < 1 or d_expanded < 1:
        raise DataError(
            f"projector dims must be >= 1, got d_encoder={d_encoder}, d_expanded={d_expanded}"
        )
    if not scale > 0.0:
        raise DataError(f"scale must be > 0, got {scale}")
    if seed < 0:
        raise DataError(f"seed must be a nonnegative integer, got {seed}")
    w = scale * counter_normals(seed, d_encoder * d_expanded)
    return RhlProjector(
        weights=w.reshape(d_encoder, d_expanded),
        seed=int(seed),
        d_encoder=int(d_encoder),
        d_expanded=int(d_expanded),
    )


def expand(projector: RhlProjector, encoder_features, chunk_rows: int = 65536) -> np.ndarray:
    """ReLU(X @ W): nonnegative expanded features, float64.

    Rows are processed in chunks of ``chunk_rows``; the chunk size
    only bounds working memory and has no effect on output values.
    """
    x = np.ascontiguousarray(encoder_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != projector.d_encoder:
        raise DataError(
            f"encoder features have width {x.shape[1] if x.ndim == 2 else x.shape}, "
            f"projector expects {projector.d_encoder}"
        )
    if chunk_rows < 1:
        raise DataError(f"chunk_rows must be >= 1, got {chunk_rows}")
    n = x.shape[0]
    out = np.empty((n, projector.d_expanded), dtype=np.float64)
    for s in range(0, n, chunk_rows):
        e = min(n, s + chunk_rows)
        block = x[s:e] @ projector.weights
        np.maximum(block, 0.0, out=block)
        out[s:e] = block
    return out

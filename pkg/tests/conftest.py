import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def rel_fro(a, b):
    """Relative Frobenius distance of a from reference b."""
    denom = np.linalg.norm(b)
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / (denom if denom > 0 else 1.0)


def dense_ridge_oracle(e, y, gamma):
    """Normal-equations ridge via explicit dense inversion (np.linalg.inv)."""
    e = np.asarray(e, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a = e.T @ e + gamma * np.eye(e.shape[1])
    inv = np.linalg.inv(a)
    return inv @ (e.T @ y), inv

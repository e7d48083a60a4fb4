"""Dense array helpers, stable softmax/log and seeded random streams.

Vectors and matrices are plain ``float64`` numpy arrays; the helpers here
only enforce shape and finiteness at module boundaries.
"""

from __future__ import annotations

import numpy as np

EPS_CLAMP = 1e-12


class InvalidInputError(ValueError):
    """Raised for non-finite or out-of-domain numeric input."""


class ShapeError(ValueError):
    """Raised when an array does not have the expected shape."""


def as_vector(x, length=None, name="vector"):
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ShapeError(f"{name} must have length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return v


def as_matrix(x, cols=None, name="matrix"):
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if cols is not None and m.shape[1] != cols:
        raise ShapeError(f"{name} must have {cols} columns, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return m


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def softmax(logits):
    """Numerically stable softmax of a single logit vector (length >= 2)."""
    z = as_vector(logits, name="logits")
    if z.shape[0] < 2:
        raise InvalidInputError("softmax needs at least 2 logits")
    e = np.exp(z - z.max())
    return e / e.sum()


def softmax_rows(logits):
    """Row-wise softmax of an ``(n, K)`` logit matrix."""
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # two-branch form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def stable_log1m(p):
    """Return ``ln(1 - p)``, clamping ``p`` to ``1 - EPS_CLAMP`` from above."""
    p = float(p)
    if not np.isfinite(p) or p < 0.0 or p > 1.0:
        raise InvalidInputError(f"probability must lie in [0, 1], got {p}")
    return float(np.log1p(-min(p, 1.0 - EPS_CLAMP)))


class SeededRng:
    """Deterministic random stream backed by the counter-based Philox generator.

    Streams for independent workers are derived from ``(seed, *keys)`` through
    ``numpy.random.SeedSequence`` so that e.g. trial ``i`` of a benchmark
    always sees the same numbers regardless of scheduling.
    """

    def __init__(self, seed, *keys):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        ss = np.random.SeedSequence([self.seed, *self.keys])
        self.generator = np.random.Generator(np.random.Philox(ss))

    def spawn(self, *keys):
        return SeededRng(self.seed, *self.keys, *keys)

    def take(self, n):
        return self.generator.integers(0, 2**64, size=n, dtype=np.uint64, endpoint=False)

    def uniform(self, low, high, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def permutation(self, n):
        return self.generator.permutation(n)

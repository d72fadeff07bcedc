"""Small numeric helpers: stable softmax pieces and basic vector ops."""

from __future__ import annotations

import numpy as np

from .params import Parameter


def sigmoid(x):
    """Elementwise logistic function, safe against exp overflow."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def sigmoid_vec(x) -> np.ndarray:
    """Vector form of the logistic function (alias kept for API symmetry)."""
    return sigmoid(np.asarray(x, dtype=np.float64))


def dot(a, b) -> float:
    """Inner product of two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dot: incompatible shapes {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def linear(w: Parameter, b: Parameter, x) -> np.ndarray:
    """Affine map x @ W + b for a 1-D input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != w.value.shape[0]:
        raise ValueError(
            f"linear: input of shape {x.shape} does not match W {w.value.shape}"
        )
    return x @ w.value + b.value


def logsumexp(a) -> float:
    """log(sum(exp(a))) computed without overflow."""
    a = np.asarray(a, dtype=np.float64)
    m = np.max(a)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(a - m))))


def log_softmax(a) -> np.ndarray:
    """Log-probabilities of a score vector."""
    a = np.asarray(a, dtype=np.float64)
    return a - logsumexp(a)

"""Trainable parameters and gradient buffers.

Dense tensors are plain float64 ``numpy.ndarray`` values. A ``Parameter``
pairs a value array with a same-shaped gradient accumulator; training code
adds into the gradient (or into a per-worker ``GradBag``) and the optimizer
consumes and zeroes it.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import NumericsError

DTYPE = np.float64


def ensure_finite(name: str, arr: np.ndarray) -> None:
    """Reject NaN/Inf values; raises NumericsError naming the offender."""
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite values in '{name}'")


class Parameter:
    """A named trainable tensor with a paired gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=DTYPE)
        ensure_finite(name, self.value)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def assign(self, value: np.ndarray) -> None:
        """Overwrite the value in place; shape must match, values finite."""
        value = np.asarray(value, dtype=DTYPE)
        if value.shape != self.value.shape:
            raise ValueError(
                f"assign to '{self.name}': shape {value.shape} != {self.value.shape}"
            )
        ensure_finite(self.name, value)
        self.value[...] = value

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def uniform_init(name: str, shape, rng: np.random.Generator,
                 scale: float = 0.08) -> Parameter:
    """Parameter drawn uniformly from [-scale, scale]."""
    return Parameter(name, rng.uniform(-scale, scale, size=shape))


def zeros_init(name: str, shape) -> Parameter:
    return Parameter(name, np.zeros(shape, dtype=DTYPE))


class GradBag:
    """Per-worker gradient buffers keyed by parameter name.

    Workers accumulate sample gradients here; the trainer merges bags into
    the real ``Parameter.grad`` arrays in a fixed order, which keeps
    parallel and serial batch evaluation bit-identical.
    """

    __slots__ = ("_buffers",)

    def __init__(self):
        self._buffers: dict[str, np.ndarray] = {}

    def buffer(self, param: Parameter) -> np.ndarray:
        buf = self._buffers.get(param.name)
        if buf is None:
            buf = np.zeros_like(param.value)
            self._buffers[param.name] = buf
        return buf

    def merge_into(self, params_by_name: dict[str, Parameter]) -> None:
        for name, buf in self._buffers.items():
            params_by_name[name].grad += buf


def sink(param: Parameter, grads: GradBag | None) -> np.ndarray:
    """Gradient target for a parameter: the bag's buffer or the grad itself."""
    if grads is None:
        return param.grad
    return grads.buffer(param)


def by_name(params: Iterable[Parameter]) -> dict[str, Parameter]:
    """Index parameters by name, rejecting duplicates."""
    out: dict[str, Parameter] = {}
    for p in params:
        if p.name in out:
            raise ValueError(f"duplicate parameter name '{p.name}'")
        out[p.name] = p
    return out

"""Kernel backend selection.

The recurrent kernels in :mod:`factqa.kernels` are compiled with numba when
it is available. Set ``FACTQA_BACKEND=numpy`` to force the pure-numpy
fallback (useful for debugging and as the benchmark baseline) or
``FACTQA_BACKEND=numba`` to fail loudly if numba cannot be imported.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from . import kernels as _plain

ENV_VAR = "FACTQA_BACKEND"


@dataclass(frozen=True)
class Kernels:
    name: str
    gru_scan_forward: Callable
    gru_scan_backward: Callable


def _numpy_backend() -> Kernels:
    return Kernels("numpy", _plain.gru_scan_forward, _plain.gru_scan_backward)


def _numba_backend() -> Kernels:
    from numba import njit

    jit = njit(cache=True, nogil=True)
    return Kernels(
        "numba",
        jit(_plain.gru_scan_forward),
        jit(_plain.gru_scan_backward),
    )


def make_backend(name: str = "auto") -> Kernels:
    """Build a kernel namespace: 'numpy', 'numba', or 'auto'."""
    if name == "numpy":
        return _numpy_backend()
    if name == "numba":
        return _numba_backend()
    if name == "auto":
        try:
            return _numba_backend()
        except ImportError:
            return _numpy_backend()
    raise ValueError(f"unknown backend '{name}' (use numpy, numba, or auto)")


kernels = make_backend(os.environ.get(ENV_VAR, "auto"))

BACKEND_NAME = kernels.name

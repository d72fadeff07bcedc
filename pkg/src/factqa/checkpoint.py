"""Binary checkpoint format for model parameters.

Layout (all integers little-endian uint32, floats little-endian float32):

    magic   8 bytes  b"CFOCKPT1"
    record  name_length, name (utf-8), rank, extents..., row-major floats
    ...
    footer  record count

Values are stored as float32; loading promotes back to float64.
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from typing import Iterable

import numpy as np

from .errors import DataError
from .params import DTYPE, Parameter, ensure_finite

MAGIC = b"CFOCKPT1"
_U32 = struct.Struct("<I")


def save_checkpoint(path, params: Iterable[Parameter]) -> None:
    """Write named parameter values; rejects non-finite values."""
    records = list(params)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for p in records:
            ensure_finite(p.name, p.value)
            name = p.name.encode("utf-8")
            fh.write(_U32.pack(len(name)))
            fh.write(name)
            fh.write(_U32.pack(p.value.ndim))
            for extent in p.value.shape:
                fh.write(_U32.pack(extent))
            fh.write(np.ascontiguousarray(p.value, dtype="<f4").tobytes())
        fh.write(_U32.pack(len(records)))


def load_checkpoint(path) -> "OrderedDict[str, np.ndarray]":
    """Read a checkpoint into an ordered name -> float64 array map."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + _U32.size or blob[:len(MAGIC)] != MAGIC:
        raise DataError(f"{path}: not a checkpoint file (bad magic)")
    end = len(blob) - _U32.size
    (expected_count,) = _U32.unpack_from(blob, end)
    out: OrderedDict[str, np.ndarray] = OrderedDict()
    pos = len(MAGIC)
    while pos < end:
        try:
            (name_len,) = _U32.unpack_from(blob, pos)
            pos += _U32.size
            name = blob[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = _U32.unpack_from(blob, pos)
            pos += _U32.size
            shape = []
            for _ in range(rank):
                (extent,) = _U32.unpack_from(blob, pos)
                pos += _U32.size
                shape.append(extent)
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(blob, dtype="<f4", count=count, offset=pos)
            pos += 4 * count
            out[name] = data.astype(DTYPE).reshape(shape)
        except (struct.error, ValueError) as exc:
            raise DataError(f"{path}: truncated or corrupt record: {exc}") from exc
    if pos != end or len(out) != expected_count:
        raise DataError(
            f"{path}: record count mismatch (footer says {expected_count}, "
            f"read {len(out)})")
    return out


def restore_parameters(params: Iterable[Parameter], loaded: dict,
                       source: str = "checkpoint") -> None:
    """Assign loaded arrays onto parameters, matching by name and shape."""
    for p in params:
        if p.name not in loaded:
            raise DataError(f"{source}: missing parameter '{p.name}'")
        arr = loaded[p.name]
        if tuple(arr.shape) != tuple(p.value.shape):
            raise DataError(
                f"{source}: shape mismatch for '{p.name}': "
                f"{arr.shape} vs {p.value.shape}")
        p.assign(arr)

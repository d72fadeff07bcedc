"""Benchmark the recurrent kernels: numba backend vs pure-numpy fallback."""

from __future__ import annotations

import time

import numpy as np

from .backend import make_backend


def _setup(T: int, d: int, seed: int):
    rng = np.random.default_rng(seed)
    xz, xr, xh = (rng.normal(size=(T, d)) for _ in range(3))
    w_hz, w_hr, w_hh = (rng.normal(size=(d, d)) * 0.1 for _ in range(3))
    h0 = np.zeros(d)
    dh_seq = rng.normal(size=(T, d))
    dh_last = rng.normal(size=d)
    return xz, xr, xh, w_hz, w_hr, w_hh, h0, dh_seq, dh_last


def _time_backend(kernels, data, repeats: int) -> float:
    xz, xr, xh, w_hz, w_hr, w_hh, h0, dh_seq, dh_last = data
    w_hz_t = np.ascontiguousarray(w_hz.T)
    w_hr_t = np.ascontiguousarray(w_hr.T)
    w_hh_t = np.ascontiguousarray(w_hh.T)
    # warmup (and JIT compile, for the numba backend)
    H, Z, R, C, HH = kernels.gru_scan_forward(xz, xr, xh, w_hz, w_hr, w_hh, h0)
    h_prev = np.vstack([h0[None, :], H[:-1]])
    kernels.gru_scan_backward(dh_seq, dh_last, Z, R, C, HH, h_prev,
                              w_hz_t, w_hr_t, w_hh_t)
    start = time.perf_counter()
    for _ in range(repeats):
        H, Z, R, C, HH = kernels.gru_scan_forward(xz, xr, xh, w_hz, w_hr,
                                                  w_hh, h0)
        h_prev = np.vstack([h0[None, :], H[:-1]])
        kernels.gru_scan_backward(dh_seq, dh_last, Z, R, C, HH, h_prev,
                                  w_hz_t, w_hr_t, w_hh_t)
    return (time.perf_counter() - start) / repeats


def run_benchmark(seq_len: int = 12, sizes=(64, 128, 256),
                  repeats: int = 200, seed: int = 0) -> list[dict]:
    """Time one forward+backward scan per backend at several hidden sizes."""
    numpy_backend = make_backend("numpy")
    try:
        numba_backend = make_backend("numba")
    except ImportError:
        numba_backend = None
    rows = []
    for d in sizes:
        data = _setup(seq_len, d, seed)
        row = {"hidden": d, "seq_len": seq_len,
               "numpy_ms": _time_backend(numpy_backend, data, repeats) * 1e3}
        if numba_backend is not None:
            row["numba_ms"] = _time_backend(numba_backend, data, repeats) * 1e3
            row["speedup"] = row["numpy_ms"] / row["numba_ms"]
            h_np = numpy_backend.gru_scan_forward(*data[:7])[0]
            h_nb = numba_backend.gru_scan_forward(*data[:7])[0]
            row["max_abs_diff"] = float(np.max(np.abs(h_np - h_nb)))
        rows.append(row)
    return rows


def format_benchmark(rows) -> str:
    lines = [f"{'hidden':>7} {'T':>4} {'numpy ms':>10} {'numba ms':>10} "
             f"{'speedup':>8} {'max |diff|':>11}"]
    for row in rows:
        if "numba_ms" in row:
            lines.append(
                f"{row['hidden']:>7} {row['seq_len']:>4} "
                f"{row['numpy_ms']:>10.4f} {row['numba_ms']:>10.4f} "
                f"{row['speedup']:>8.2f} {row['max_abs_diff']:>11.2e}")
        else:
            lines.append(
                f"{row['hidden']:>7} {row['seq_len']:>4} "
                f"{row['numpy_ms']:>10.4f} {'n/a':>10} {'n/a':>8} {'n/a':>11}")
    return "\n".join(lines)

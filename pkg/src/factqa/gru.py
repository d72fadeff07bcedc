"""Gated recurrent cells and stacked bidirectional encoders.

Gate equations per step (all elementwise except the matmuls):

    z = sigmoid(x W_xz + h_prev W_hz + b_z)
    r = sigmoid(x W_xr + h_prev W_hr + b_r)
    c = tanh(x W_xh + r * (h_prev W_hh) + b_h)
    h = z * h_prev + (1 - z) * c

Backward passes are hand-derived; see tests for the finite-difference
verification. The sequential scans run on the selected kernel backend.
"""

from __future__ import annotations

import numpy as np

from .backend import kernels
from .params import DTYPE, GradBag, Parameter, sink, uniform_init


class GruCell:
    """One direction of a GRU layer."""

    def __init__(self, w_xz, w_hz, b_z, w_xr, w_hr, b_r, w_xh, w_hh, b_h):
        self.w_xz, self.w_hz, self.b_z = w_xz, w_hz, b_z
        self.w_xr, self.w_hr, self.b_r = w_xr, w_hr, b_r
        self.w_xh, self.w_hh, self.b_h = w_xh, w_hh, b_h
        d_in, d_h = w_xz.value.shape
        for m in (w_hz, w_hr, w_hh):
            if m.value.shape != (d_h, d_h):
                raise ValueError(f"recurrent matrix {m.name} must be ({d_h},{d_h})")
        self.d_in = d_in
        self.d_h = d_h

    @classmethod
    def create(cls, name: str, d_in: int, d_h: int, rng: np.random.Generator,
               init_range: float = 0.08) -> "GruCell":
        def u(suffix, shape):
            return uniform_init(f"{name}.{suffix}", shape, rng, init_range)

        return cls(
            u("w_xz", (d_in, d_h)), u("w_hz", (d_h, d_h)), u("b_z", (d_h,)),
            u("w_xr", (d_in, d_h)), u("w_hr", (d_h, d_h)), u("b_r", (d_h,)),
            u("w_xh", (d_in, d_h)), u("w_hh", (d_h, d_h)), u("b_h", (d_h,)),
        )

    def parameters(self) -> list[Parameter]:
        return [self.w_xz, self.w_hz, self.b_z,
                self.w_xr, self.w_hr, self.b_r,
                self.w_xh, self.w_hh, self.b_h]

    def step(self, x, h_prev) -> np.ndarray:
        """Single forward step; value only, no cache."""
        x = np.asarray(x, dtype=DTYPE)
        h_prev = np.asarray(h_prev, dtype=DTYPE)
        if x.shape != (self.d_in,) or h_prev.shape != (self.d_h,):
            raise ValueError(
                f"step: got x{x.shape}, h{h_prev.shape}; "
                f"expected ({self.d_in},), ({self.d_h},)"
            )
        H, _, _, _, _ = self._scan(x[None, :], h_prev)
        return H[0]

    def _scan(self, X, h0):
        xz = X @ self.w_xz.value + self.b_z.value
        xr = X @ self.w_xr.value + self.b_r.value
        xh = X @ self.w_xh.value + self.b_h.value
        return kernels.gru_scan_forward(
            xz, xr, xh, self.w_hz.value, self.w_hr.value, self.w_hh.value, h0)

    def forward(self, X: np.ndarray):
        """Run over a (T, d_in) sequence from a zero initial state.

        Returns (H, cache) with H of shape (T, d_h).
        """
        X = np.ascontiguousarray(X, dtype=DTYPE)
        if X.ndim != 2 or X.shape[1] != self.d_in:
            raise ValueError(f"forward: expected (T, {self.d_in}), got {X.shape}")
        h0 = np.zeros(self.d_h, dtype=DTYPE)
        H, Z, R, C, HH = self._scan(X, h0)
        return H, (X, h0, H, Z, R, C, HH)

    def backward(self, cache, dh_seq=None, dh_last=None,
                 grads: GradBag | None = None) -> np.ndarray:
        """Accumulate parameter gradients; returns gradient on the input X."""
        X, h0, H, Z, R, C, HH = cache
        T = X.shape[0]
        if dh_seq is None:
            dh_seq = np.zeros((T, self.d_h), dtype=DTYPE)
        if dh_last is None:
            dh_last = np.zeros(self.d_h, dtype=DTYPE)
        h_prev = np.empty_like(H)
        h_prev[0] = h0
        h_prev[1:] = H[:-1]
        dpz, dpr, dph, dhh, _ = kernels.gru_scan_backward(
            np.ascontiguousarray(dh_seq, dtype=DTYPE),
            np.ascontiguousarray(dh_last, dtype=DTYPE),
            Z, R, C, HH, h_prev,
            np.ascontiguousarray(self.w_hz.value.T),
            np.ascontiguousarray(self.w_hr.value.T),
            np.ascontiguousarray(self.w_hh.value.T),
        )
        sink(self.w_xz, grads)[...] += X.T @ dpz
        sink(self.w_xr, grads)[...] += X.T @ dpr
        sink(self.w_xh, grads)[...] += X.T @ dph
        sink(self.b_z, grads)[...] += dpz.sum(axis=0)
        sink(self.b_r, grads)[...] += dpr.sum(axis=0)
        sink(self.b_h, grads)[...] += dph.sum(axis=0)
        sink(self.w_hz, grads)[...] += h_prev.T @ dpz
        sink(self.w_hr, grads)[...] += h_prev.T @ dpr
        sink(self.w_hh, grads)[...] += h_prev.T @ dhh
        return dpz @ self.w_xz.value.T + dpr @ self.w_xr.value.T \
            + dph @ self.w_xh.value.T


def gru_cell_step(cell: GruCell, x, h_prev) -> np.ndarray:
    """Functional form of a single GRU step."""
    return cell.step(x, h_prev)


def dropout_mask(dim: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: zeros with prob `rate`, survivors scaled."""
    keep = rng.random(dim) >= rate
    return keep.astype(DTYPE) / (1.0 - rate)


class BiGruStack:
    """Stacked bidirectional GRU layers with vertical dropout.

    Dropout is applied only to the activations crossing a layer boundary
    (one mask per boundary, shared across timesteps), never to recurrent
    connections, and only when training.
    """

    def __init__(self, layers: list[tuple[GruCell, GruCell]], dropout_rate: float = 0.0):
        if not layers:
            raise ValueError("stack needs at least one layer")
        if not 0.0 <= dropout_rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        for i, (f, b) in enumerate(layers):
            if f.d_h != b.d_h or f.d_in != b.d_in:
                raise ValueError(f"layer {i}: direction dims disagree")
            if i > 0 and f.d_in != 2 * layers[i - 1][0].d_h:
                raise ValueError(f"layer {i}: input dim must be twice the previous hidden")
        self.layers = layers
        self.dropout_rate = dropout_rate

    @classmethod
    def create(cls, name: str, d_in: int, d_h: int, num_layers: int,
               rng: np.random.Generator, dropout_rate: float = 0.0,
               init_range: float = 0.08) -> "BiGruStack":
        layers = []
        for i in range(num_layers):
            din = d_in if i == 0 else 2 * d_h
            fwd = GruCell.create(f"{name}.l{i}.fwd", din, d_h, rng, init_range)
            bwd = GruCell.create(f"{name}.l{i}.bwd", din, d_h, rng, init_range)
            layers.append((fwd, bwd))
        return cls(layers, dropout_rate)

    @property
    def d_out(self) -> int:
        return 2 * self.layers[-1][0].d_h

    def parameters(self) -> list[Parameter]:
        out = []
        for fwd, bwd in self.layers:
            out.extend(fwd.parameters())
            out.extend(bwd.parameters())
        return out

    def forward(self, X: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None):
        """Encode a (T, d_in) sequence.

        Returns (hidden_seq, final, cache): hidden_seq is (T, 2*d_h) from
        the top layer; final concatenates the forward state at the last
        token with the backward state at the first token.
        """
        X = np.ascontiguousarray(X, dtype=DTYPE)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("forward: need a non-empty (T, d_in) sequence")
        if training and self.dropout_rate > 0.0 and rng is None:
            raise ValueError("training with dropout requires an rng")
        inp = X
        steps = []
        for i, (fwd, bwd) in enumerate(self.layers):
            mask = None
            if i > 0 and training and self.dropout_rate > 0.0:
                mask = dropout_mask(inp.shape[1], self.dropout_rate, rng)
                inp = inp * mask
            h_f, cache_f = fwd.forward(inp)
            h_b_rev, cache_b = bwd.forward(inp[::-1])
            h_b = h_b_rev[::-1]
            steps.append((cache_f, cache_b, mask))
            inp = np.concatenate([h_f, h_b], axis=1)
        final = np.concatenate([h_f[-1], h_b[0]])
        return inp, final, steps

    def backward(self, cache, d_hidden_seq=None, d_final=None,
                 grads: GradBag | None = None) -> np.ndarray:
        """Backprop through the stack; returns gradient on the input."""
        steps = cache
        d = self.layers[-1][0].d_h
        T = steps[-1][0][0].shape[0]
        if d_hidden_seq is None:
            d_hidden_seq = np.zeros((T, 2 * d), dtype=DTYPE)
        d_up = np.asarray(d_hidden_seq, dtype=DTYPE)
        d_last_f = None
        d_last_b = None
        if d_final is not None:
            d_last_f = np.asarray(d_final[:d], dtype=DTYPE)
            d_last_b = np.asarray(d_final[d:], dtype=DTYPE)
        for i in range(len(self.layers) - 1, -1, -1):
            fwd, bwd = self.layers[i]
            cache_f, cache_b, mask = steps[i]
            dh = fwd.d_h
            d_f_seq = np.ascontiguousarray(d_up[:, :dh])
            d_b_seq = np.ascontiguousarray(d_up[::-1, dh:])
            dx = fwd.backward(cache_f, d_f_seq, d_last_f, grads)
            dx = dx + bwd.backward(cache_b, d_b_seq, d_last_b, grads)[::-1]
            d_last_f = None
            d_last_b = None
            if mask is not None:
                dx = dx * mask
            d_up = dx
        return d_up

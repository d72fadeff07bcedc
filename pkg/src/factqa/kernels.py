"""Hot recurrent kernels, written once so they run under numba or plain numpy.

Both functions are valid nopython-mode numba and valid numpy Python. The
input-side projections (x_t @ W_x*) are batched into single matmuls by the
caller; only the sequential recurrence lives here.

Shapes: T = sequence length, d = hidden size.
"""

import numpy as np


def gru_scan_forward(xz, xr, xh, w_hz, w_hr, w_hh, h0):
    """Run a GRU over a sequence.

    xz, xr, xh: (T, d) input-side pre-activations (x @ W_x* + b_*).
    w_h*: (d, d) recurrent weights, h0: (d,) initial state.

    Returns (H, Z, R, C, HH): hidden states and per-step gate caches,
    all (T, d). C is the candidate state, HH the raw h_prev @ w_hh term
    (needed because the reset gate multiplies the product, not h_prev).
    """
    T = xz.shape[0]
    d = xz.shape[1]
    H = np.empty((T, d))
    Z = np.empty((T, d))
    R = np.empty((T, d))
    C = np.empty((T, d))
    HH = np.empty((T, d))
    h = h0.copy()
    for t in range(T):
        az = xz[t] + np.dot(h, w_hz)
        ar = xr[t] + np.dot(h, w_hr)
        hh = np.dot(h, w_hh)
        z = 1.0 / (1.0 + np.exp(-az))
        r = 1.0 / (1.0 + np.exp(-ar))
        c = np.tanh(xh[t] + r * hh)
        h = z * h + (1.0 - z) * c
        Z[t] = z
        R[t] = r
        C[t] = c
        HH[t] = hh
        H[t] = h
    return H, Z, R, C, HH


def gru_scan_backward(dh_seq, dh_last, Z, R, C, HH, Hprev,
                      w_hz_t, w_hr_t, w_hh_t):
    """Backward pass through the GRU recurrence.

    dh_seq: (T, d) upstream gradient on every hidden state; dh_last: (d,)
    extra gradient on the final state. Hprev holds h_{t-1} rows; w_*_t are
    the transposed recurrent weights (contiguous copies).

    Returns (dpz, dpr, dph, dhh, dh0): pre-activation gradients for the
    three gates (update, reset, candidate), the gradient on the
    h_prev @ w_hh product, and the gradient on the initial state. The
    caller turns these into weight/input gradients with batched matmuls.
    """
    T = Z.shape[0]
    d = Z.shape[1]
    dpz = np.empty((T, d))
    dpr = np.empty((T, d))
    dph = np.empty((T, d))
    dhh = np.empty((T, d))
    dh = dh_last.copy()
    for t in range(T - 1, -1, -1):
        dh = dh + dh_seq[t]
        z = Z[t]
        r = R[t]
        c = C[t]
        hh = HH[t]
        hp = Hprev[t]
        dc = dh * (1.0 - z)
        dz = dh * (hp - c)
        dh_prev = dh * z
        g_ph = dc * (1.0 - c * c)
        g_hh = g_ph * r
        dr = g_ph * hh
        g_pz = dz * z * (1.0 - z)
        g_pr = dr * r * (1.0 - r)
        dh_prev = dh_prev + np.dot(g_pz, w_hz_t) + np.dot(g_pr, w_hr_t) \
            + np.dot(g_hh, w_hh_t)
        dpz[t] = g_pz
        dpr[t] = g_pr
        dph[t] = g_ph
        dhh[t] = g_hh
        dh = dh_prev
    return dpz, dpr, dph, dhh, dh

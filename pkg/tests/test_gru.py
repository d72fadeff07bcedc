import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from factqa.backend import make_backend
from factqa.gru import BiGruStack, GruCell, dropout_mask, gru_cell_step


def scalar_gru_step(cell, x, h_prev):
    """Independent per-element recomputation of the gate equations."""
    d_h = cell.d_h
    h_new = np.zeros(d_h)
    for j in range(d_h):
        az = cell.b_z.value[j]
        ar = cell.b_r.value[j]
        for i in range(cell.d_in):
            az += x[i] * cell.w_xz.value[i, j]
            ar += x[i] * cell.w_xr.value[i, j]
        for i in range(d_h):
            az += h_prev[i] * cell.w_hz.value[i, j]
            ar += h_prev[i] * cell.w_hr.value[i, j]
        z = 1.0 / (1.0 + math.exp(-az))
        r = 1.0 / (1.0 + math.exp(-ar))
        ah = cell.b_h.value[j]
        for i in range(cell.d_in):
            ah += x[i] * cell.w_xh.value[i, j]
        hh = 0.0
        for i in range(d_h):
            hh += h_prev[i] * cell.w_hh.value[i, j]
        c = math.tanh(ah + r * hh)
        h_new[j] = z * h_prev[j] + (1.0 - z) * c
    return h_new


class TestGruCell:
    def test_all_zero_weights(self, rng):
        cell = GruCell.create("c", 2, 1, rng)
        for p in cell.parameters():
            p.value[...] = 0.0
        h = cell.step([3.0, -1.0], [1.0])
        assert h == pytest.approx([0.5])

    def test_saturated_update_gate_carries_state(self, rng):
        cell = GruCell.create("c", 2, 1, rng)
        for p in cell.parameters():
            p.value[...] = 0.0
        cell.b_z.value[...] = 20.0
        h = cell.step([5.0, 5.0], [0.7])
        assert h == pytest.approx([0.7], abs=1e-6)

    def test_matches_scalar_oracle(self, rng):
        cell = GruCell.create("c", 3, 3, rng)
        x = rng.normal(size=3)
        h_prev = rng.normal(size=3)
        fast = cell.step(x, h_prev)
        slow = scalar_gru_step(cell, x, h_prev)
        np.testing.assert_allclose(fast, slow, atol=1e-12)

    def test_sequence_matches_repeated_steps(self, rng):
        cell = GruCell.create("c", 2, 3, rng)
        X = rng.normal(size=(5, 2))
        H, _ = cell.forward(X)
        h = np.zeros(3)
        for t in range(5):
            h = gru_cell_step(cell, X[t], h)
            np.testing.assert_allclose(H[t], h, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        cell = GruCell.create("c", 2, 3, rng)
        with pytest.raises(ValueError):
            cell.step([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            cell.forward(np.zeros((4, 5)))

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=2),
           st.lists(st.floats(-5, 5), min_size=3, max_size=3))
    def test_output_bounded_by_convex_combination(self, x, h_prev):
        rng = np.random.default_rng(7)
        cell = GruCell.create("c", 2, 3, rng)
        h = cell.step(np.array(x), np.array(h_prev))
        bound = np.maximum(np.abs(np.array(h_prev)), 1.0)
        assert np.all(np.abs(h) <= bound + 1e-12)


class TestBackendParity:
    def test_numpy_and_numba_agree(self, rng):
        try:
            numba_k = make_backend("numba")
        except ImportError:
            pytest.skip("numba not available")
        numpy_k = make_backend("numpy")
        T, d = 6, 5
        args = (rng.normal(size=(T, d)), rng.normal(size=(T, d)),
                rng.normal(size=(T, d)), rng.normal(size=(d, d)) * 0.2,
                rng.normal(size=(d, d)) * 0.2, rng.normal(size=(d, d)) * 0.2,
                np.zeros(d))
        out_np = numpy_k.gru_scan_forward(*args)
        out_nb = numba_k.gru_scan_forward(*args)
        for a, b in zip(out_np, out_nb):
            np.testing.assert_allclose(a, b, atol=1e-12)


class TestBiGruStack:
    def test_length_one_final_equals_hidden(self, rng):
        stack = BiGruStack.create("s", 3, 2, 2, rng)
        X = rng.normal(size=(1, 3))
        hidden, final, _ = stack.forward(X)
        np.testing.assert_array_equal(hidden[0], final)

    def test_inference_repeatable(self, rng):
        stack = BiGruStack.create("s", 3, 2, 2, rng, dropout_rate=0.5)
        X = rng.normal(size=(4, 3))
        h1, f1, _ = stack.forward(X, training=False)
        h2, f2, _ = stack.forward(X, training=False)
        assert np.array_equal(h1, h2)
        assert np.array_equal(f1, f2)

    def test_matches_manual_composition(self, rng):
        stack = BiGruStack.create("s", 3, 2, 2, rng, dropout_rate=0.0)
        X = rng.normal(size=(3, 3))
        hidden, final, _ = stack.forward(X)

        inp = X
        for fwd, bwd in stack.layers:
            T = inp.shape[0]
            hf = np.zeros(fwd.d_h)
            fwd_seq = []
            for t in range(T):
                hf = gru_cell_step(fwd, inp[t], hf)
                fwd_seq.append(hf)
            hb = np.zeros(bwd.d_h)
            bwd_seq = [None] * T
            for t in range(T - 1, -1, -1):
                hb = gru_cell_step(bwd, inp[t], hb)
                bwd_seq[t] = hb
            inp = np.stack([np.concatenate([f, b])
                            for f, b in zip(fwd_seq, bwd_seq)])
        np.testing.assert_allclose(hidden, inp, atol=1e-12)
        np.testing.assert_allclose(
            final, np.concatenate([fwd_seq[-1], bwd_seq[0]]), atol=1e-12)

    def test_empty_sequence_rejected(self, rng):
        stack = BiGruStack.create("s", 3, 2, 1, rng)
        with pytest.raises(ValueError):
            stack.forward(np.zeros((0, 3)))

    def test_single_layer_training_has_no_dropout_boundary(self, rng):
        stack = BiGruStack.create("s", 3, 2, 1, rng, dropout_rate=0.9)
        X = rng.normal(size=(4, 3))
        h_train, _, _ = stack.forward(X, training=True,
                                      rng=np.random.default_rng(0))
        h_eval, _, _ = stack.forward(X, training=False)
        assert np.array_equal(h_train, h_eval)

    def test_training_requires_rng_with_dropout(self, rng):
        stack = BiGruStack.create("s", 3, 2, 2, rng, dropout_rate=0.5)
        with pytest.raises(ValueError):
            stack.forward(np.zeros((2, 3)), training=True)


class TestDropout:
    def test_inverted_scaling_preserves_mean(self):
        rng = np.random.default_rng(0)
        x = np.array([1.0, -2.0, 0.5, 3.0])
        n = 40_000
        masks = (rng.random((n, 4)) >= 0.5) / 0.5
        mean = (x * masks).mean(axis=0)
        np.testing.assert_allclose(mean, x, rtol=0.02)

    def test_mask_values(self):
        rng = np.random.default_rng(0)
        mask = dropout_mask(1000, 0.5, rng)
        assert set(np.unique(mask)).issubset({0.0, 2.0})

import numpy as np
import pytest

from factqa.errors import NumericsError
from factqa.gradcheck import finite_diff_check
from factqa.params import Parameter


def test_quadratic_is_exact_to_rounding():
    rng = np.random.default_rng(1)
    w = Parameter("w", rng.normal(size=5))

    def loss():
        w.grad += w.value
        return 0.5 * float(w.value @ w.value)

    assert finite_diff_check(loss, [w]) < 1e-8


def test_detects_wrong_gradient():
    w = Parameter("w", np.array([1.0, 2.0]))

    def loss():
        w.grad += 2.0 * w.value  # deliberately off by a factor of two
        return 0.5 * float(w.value @ w.value)

    assert finite_diff_check(loss, [w]) > 0.1


def test_detects_nondeterministic_loss():
    w = Parameter("w", np.array([1.0]))
    state = {"calls": 0}

    def loss():
        state["calls"] += 1
        return float(w.value[0]) + state["calls"] * 1e-3

    with pytest.raises(NumericsError):
        finite_diff_check(loss, [w])


def test_values_restored_after_check():
    w = Parameter("w", np.array([1.0, -2.0, 3.0]))
    snapshot = w.value.copy()

    def loss():
        w.grad += w.value
        return 0.5 * float(w.value @ w.value)

    finite_diff_check(loss, [w])
    np.testing.assert_array_equal(w.value, snapshot)
    assert np.all(w.grad == 0.0)

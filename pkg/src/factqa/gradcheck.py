"""Central-difference verification of the hand-written backward passes.

``finite_diff_check`` perturbs every element of every parameter and
compares (loss(w+eps) - loss(w-eps)) / (2 eps) against the analytic
gradient. All arithmetic is float64. The loss callable must be
deterministic (dropout off, fixed inputs); this is verified by evaluating
it twice before the sweep.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import NumericsError
from .params import Parameter


def finite_diff_check(loss_fn: Callable[[], float],
                      params: Sequence[Parameter],
                      epsilon: float = 1e-4) -> float:
    """Max relative error between analytic and numeric gradients.

    ``loss_fn`` must compute the loss AND accumulate analytic gradients
    into each parameter's ``grad`` when called with cleared gradients.
    Relative error per element is |ga - gf| / max(|ga|, |gf|, 1e-8).
    """
    for p in params:
        p.zero_grad()
    base = loss_fn()
    repeat = loss_fn()
    if base != repeat:
        raise NumericsError(
            f"loss function is not deterministic ({base!r} vs {repeat!r})")
    for p in params:
        p.zero_grad()
    loss_fn()
    analytic = [p.grad.copy() for p in params]

    max_rel = 0.0
    for p, ga in zip(params, analytic):
        flat_v = p.value.reshape(-1)
        flat_g = ga.reshape(-1)
        for i in range(flat_v.size):
            orig = flat_v[i]
            flat_v[i] = orig + epsilon
            up = loss_fn()
            flat_v[i] = orig - epsilon
            down = loss_fn()
            flat_v[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(abs(flat_g[i]), abs(numeric), 1e-8)
            rel = abs(flat_g[i] - numeric) / denom
            if rel > max_rel:
                max_rel = rel
    for p in params:
        p.zero_grad()
    return max_rel

"""Finite-difference verification of reverse-mode gradients.

The checker is the pipeline's independent oracle for every analytic gradient:
it perturbs each parameter coordinate by +-h and compares the central
difference against the tape's gradient.  Functions under check must be
deterministic (disable dropout).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor


def grad_check(f: Callable[[], Tensor], params: dict[str, Tensor],
               h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    Error per coordinate is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|); the max
    over all coordinates of all tensors in ``params`` is returned.
    """
    for p in params.values():
        p.grad = None
    loss = f()
    loss.backward()
    analytic = {k: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
                for k, p in params.items()}

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        g_ad = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f().item()
            flat[i] = orig - h
            f_minus = f().item()
            flat[i] = orig
            g_fd = (f_plus - f_minus) / (2.0 * h)
            err = abs(g_ad[i] - g_fd) / max(1.0, abs(g_ad[i]), abs(g_fd))
            if err > worst:
                worst = err
    return worst

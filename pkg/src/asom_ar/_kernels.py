"""Compiled inner loops for distance fields and weight updates.

Each kernel makes a single pass over a weight matrix, which avoids the
full-size temporaries numpy would allocate for a 900 x 900 external bank.
"""
from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True)
def sq_distances(weights, x, out):
    n, m = weights.shape
    for i in range(n):
        s = 0.0
        for k in range(m):
            d = weights[i, k] - x[k]
            s += d * d
        out[i] = s
    return out


@nb.njit(cache=True)
def move_towards(weights, x, rate):
    """``w_i += rate_i * (x - w_i)`` row by row; zero rates are skipped."""
    n, m = weights.shape
    for i in range(n):
        r = rate[i]
        if r != 0.0:
            for k in range(m):
                weights[i, k] += r * (x[k] - weights[i, k])


@nb.njit(cache=True)
def add_outer(weights, x, rate):
    """``w_i += rate_i * x`` row by row."""
    n, m = weights.shape
    for i in range(n):
        r = rate[i]
        if r != 0.0:
            for k in range(m):
                weights[i, k] += r * x[k]


def contiguous(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)

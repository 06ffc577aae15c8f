"""Compiled inner loops."""

from __future__ import annotations

import math

import numba
import numpy as np

VAR_FLOOR = 1e-12


@numba.njit(cache=True, nogil=True)
def theta_sweep(theta_c, y_c, scales, sigma2, lambda0, z):
    """One systematic Gibbs sweep over a chain, root (slot 0) first.

    ``theta_c`` and ``y_c`` are in chain order and ``scales[k]`` is the
    mixing variance of the link between slots k and k+1. Updates in place.
    """
    n = theta_c.shape[0]
    for t in range(n):
        prec = 1.0
        num = y_c[t]
        if t == 0:
            prec += 1.0 / lambda0
        if t > 0:
            w = 1.0 / scales[t - 1]
            prec += w
            num += w * theta_c[t - 1]
        if t < n - 1:
            w = 1.0 / scales[t]
            prec += w
            num += w * theta_c[t + 1]
        var = sigma2 / prec
        if var < VAR_FLOOR:
            var = VAR_FLOOR
        theta_c[t] = num / prec + math.sqrt(var) * z[t]


def warm_up() -> None:
    theta_sweep(np.zeros(2), np.zeros(2), np.ones(1), 1.0, 1.0, np.zeros(2))

"""Compiled inner loops. Everything here is a pure function of its array inputs."""

import numpy as np
from numba import njit


@njit(cache=True)
def convolve(f, g, out):
    # out[n] += sum_{de=n} f[d] g[e]; index 0 is unused
    n_max = out.shape[0] - 1
    for d in range(1, n_max + 1):
        fd = f[d]
        if fd == 0:
            continue
        m = d
        e = 1
        while m <= n_max:
            out[m] += fd * g[e]
            m += d
            e += 1
    return out


@njit(cache=True)
def divisor_accumulate(support, coeff, out):
    # out[m] += coeff[j] for every m that is a multiple of support[j]
    n_max = out.shape[0] - 1
    for j in range(support.shape[0]):
        q = support[j]
        if q > n_max:
            continue
        c = coeff[j]
        for m in range(q, n_max + 1, q):
            out[m] += c
    return out


def empty_like_result(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.zeros(f.shape[0], dtype=np.result_type(f.dtype, g.dtype))

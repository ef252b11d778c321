"""Numpy fallbacks with the same signatures as the compiled ``_core`` kernels."""

import numpy as np


def trunc_mul1(a, b, n):
    return np.convolve(a, b)[: n + 1].astype(np.complex128, copy=False)


def trunc_mul2(a, b, n):
    # row-wise convolutions; entries with i + j > n are cleared at the end
    out = np.zeros((n + 1, n + 1), dtype=np.complex128)
    rows_b = [k for k in range(n + 1) if np.any(b[k])]
    for i in range(n + 1):
        ai = a[i, : n + 1 - i]
        if not np.any(ai):
            continue
        for k in rows_b:
            if i + k > n:
                break
            width = n + 1 - i - k
            out[i + k, :width] += np.convolve(ai[:width], b[k, :width])[:width]
    return out


def peierls_apply(psi, ux, uy, scale):
    out = 4.0 * psi
    out[:-1, :] -= ux[:-1, :] * psi[1:, :]
    out[1:, :] -= np.conj(ux[:-1, :]) * psi[:-1, :]
    out[:, :-1] -= uy[:, :-1] * psi[:, 1:]
    out[:, 1:] -= np.conj(uy[:, :-1]) * psi[:, :-1]
    return scale * out

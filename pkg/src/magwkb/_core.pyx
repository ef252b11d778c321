# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: truncated Cauchy products and the Peierls stencil."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def trunc_mul1(a, b, int n):
    cdef const double[::1] x = np.ascontiguousarray(a, dtype=np.complex128).view(np.float64)
    cdef const double[::1] y = np.ascontiguousarray(b, dtype=np.complex128).view(np.float64)
    out = np.zeros(n + 1, dtype=np.complex128)
    cdef double[::1] c = out.view(np.float64)
    cdef Py_ssize_t i, j
    cdef double ar, ai
    for i in range(n + 1):
        ar = x[2 * i]
        ai = x[2 * i + 1]
        if ar == 0 and ai == 0:
            continue
        for j in range(n + 1 - i):
            c[2 * (i + j)] += ar * y[2 * j] - ai * y[2 * j + 1]
            c[2 * (i + j) + 1] += ar * y[2 * j + 1] + ai * y[2 * j]
    return out


def trunc_mul2(a, b, int n):
    """Product of two square-stored triangular arrays, kept to total degree n."""
    cdef const double[:, ::1] x = np.ascontiguousarray(a, dtype=np.complex128).view(np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(b, dtype=np.complex128).view(np.float64)
    out = np.zeros((n + 1, n + 1), dtype=np.complex128)
    cdef double[:, ::1] c = out.view(np.float64)
    cdef Py_ssize_t i1, j1, i2, j2, r1, r2, o
    cdef double ar, ai
    for i1 in range(n + 1):
        for j1 in range(n + 1 - i1):
            ar = x[i1, 2 * j1]
            ai = x[i1, 2 * j1 + 1]
            if ar == 0 and ai == 0:
                continue
            r1 = n - i1 - j1
            for i2 in range(r1 + 1):
                r2 = r1 - i2
                o = 2 * j1
                for j2 in range(r2 + 1):
                    c[i1 + i2, o + 2 * j2] += ar * y[i2, 2 * j2] - ai * y[i2, 2 * j2 + 1]
                    c[i1 + i2, o + 2 * j2 + 1] += ar * y[i2, 2 * j2 + 1] + ai * y[i2, 2 * j2]
    return out


def peierls_apply(const double complex[:, ::1] psi,
                  const double complex[:, ::1] ux,
                  const double complex[:, ::1] uy,
                  double scale):
    """Five-point link-variable stencil on interior unknowns (zero Dirichlet data).

    ``ux[a, b]`` is the link from (a, b) to (a+1, b); ``uy[a, b]`` from
    (a, b) to (a, b+1).
    """
    cdef Py_ssize_t n0 = psi.shape[0], n1 = psi.shape[1], a, b
    cdef double complex acc
    out = np.empty((n0, n1), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    for a in range(n0):
        for b in range(n1):
            acc = 4.0 * psi[a, b]
            if a + 1 < n0:
                acc = acc - ux[a, b] * psi[a + 1, b]
            if a > 0:
                acc = acc - ux[a - 1, b].conjugate() * psi[a - 1, b]
            if b + 1 < n1:
                acc = acc - uy[a, b] * psi[a, b + 1]
            if b > 0:
                acc = acc - uy[a, b - 1].conjugate() * psi[a, b - 1]
            o[a, b] = scale * acc
    return out

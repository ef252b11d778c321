import os

import numpy as np
import pytest

from magwkb import kernels

BACKENDS = kernels.backends()


def _tri(rng, n):
    a = rng.standard_normal((n + 1, n + 1)) + 1j * rng.standard_normal((n + 1, n + 1))
    i, j = np.indices(a.shape)
    a[i + j > n] = 0
    return a


def test_extension_is_preferred():
    if "cython" in BACKENDS and os.environ.get("MAGWKB_PURE") != "1":
        assert kernels.BACKEND == "cython"
    else:
        assert kernels.BACKEND == "python"


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("n", [0, 1, 5, 17])
def test_trunc_mul_matches_reference(name, n, rng):
    mod = BACKENDS[name]
    a = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    b = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    np.testing.assert_allclose(np.asarray(mod.trunc_mul1(a, b, n)),
                               np.convolve(a, b)[: n + 1], rtol=1e-13, atol=1e-13)
    A, B = _tri(rng, n), _tri(rng, n)
    ref = np.zeros_like(A)
    for i in range(n + 1):
        for j in range(n + 1 - i):
            for k in range(i + 1):
                for l in range(j + 1):
                    ref[i, j] += A[k, l] * B[i - k, j - l]
    out = np.asarray(mod.trunc_mul2(A, B, n))
    i, j = np.indices(A.shape)
    np.testing.assert_allclose(out[i + j <= n], ref[i + j <= n], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_peierls_apply_matches_sparse(name, rng):
    from magwkb.validator import build_discrete_operator
    op = build_discrete_operator(None, 0.1, M=20,
                                 potential=lambda X, Y: (-0.5 * Y + X ** 2, 0.5 * X))
    psi = rng.standard_normal((18, 18)) + 1j * rng.standard_normal((18, 18))
    out = np.asarray(BACKENDS[name].peierls_apply(psi, op.ux, op.uy, op.scale))
    np.testing.assert_allclose(out.ravel(), op.matrix() @ psi.ravel(), rtol=1e-13, atol=1e-12)


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled extension not built")
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    A, B = _tri(rng, 24), _tri(rng, 24)
    np.testing.assert_allclose(np.asarray(cy.trunc_mul2(A, B, 24)),
                               np.asarray(py.trunc_mul2(A, B, 24)), rtol=1e-13, atol=1e-12)

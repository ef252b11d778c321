import math

import numpy as np
import pytest
import scipy.linalg

from magwkb.errors import EigenNoConvergence, ValidatorError
from magwkb.field import field_from_coeffs
from magwkb.validator import (SweepPoint, build_discrete_operator, compare_eigenvalues, cutoff,
                              lowest_eigenpairs, overlap)

from conftest import ANISO, RADIAL


@pytest.fixture(scope="module")
def radial():
    return field_from_coeffs(RADIAL, 8)


def landau(X, Y):
    return -0.5 * Y, 0.5 * X


def test_hermitian_and_matrix_free_agree(radial):
    op = build_discrete_operator(radial, 0.1, M=40)
    H = op.matrix()
    assert abs(H - H.conj().T).max() < 1e-15
    rng = np.random.default_rng(0)
    n = H.shape[0]
    for _ in range(10):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lhs = np.vdot(x, op.apply(y))
        rhs = np.vdot(op.apply(x), y)
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
        np.testing.assert_allclose(op.apply(y), H @ y, rtol=1e-13, atol=1e-13)
        assert op.rayleigh(x) > 0


def test_zero_potential_is_dirichlet_laplacian():
    op = build_discrete_operator(None, 0.2, M=20, potential=lambda X, Y: (0 * X, 0 * Y))
    assert abs(op.matrix().imag).max() == 0
    ep = lowest_eigenpairs(op, k=3, sigma=0.0)
    n = op.n_side
    t = np.pi * np.arange(1, n + 1) / (n + 1)
    lam = np.sort((4 - 2 * np.cos(t)[:, None] - 2 * np.cos(t)[None, :]).ravel()) * op.scale
    np.testing.assert_allclose(ep.values, lam[:3], rtol=1e-12)


def test_shift_invert_matches_dense(radial):
    op = build_discrete_operator(radial, 0.08, M=32)
    ref = scipy.linalg.eigh(op.matrix().toarray(), eigvals_only=True)[:3]
    ep = lowest_eigenpairs(op, k=3, dense_max=0)
    assert ep.method == "shift-invert"
    np.testing.assert_allclose(ep.values, ref, rtol=1e-10)
    assert ep.residuals.max() <= 1e-8
    dense = lowest_eigenpairs(op, k=3)
    assert dense.method == "dense"
    for j in range(3):
        assert overlap(ep.vectors[:, j], dense.vectors[:, j]) == pytest.approx(1, abs=1e-8)


def test_positive_spectrum(radial):
    op = build_discrete_operator(radial, 0.1, M=24)
    vals = scipy.linalg.eigvalsh(op.matrix().toarray())
    assert vals.min() > 0


def test_lattice_gauge_covariance(radial):
    op = build_discrete_operator(radial, 0.1, M=30)
    X, Y = op.coords()
    rng = np.random.default_rng(3)
    lam = lowest_eigenpairs(op, k=2).values
    for _ in range(3):
        c = rng.standard_normal(4)
        chi = c[0] * X + c[1] * Y ** 2 + c[2] * np.sin(X * Y + c[3])
        g = np.exp(1j * chi / op.h)
        op2 = build_discrete_operator(radial, 0.1, M=30)
        op2.ux = op.ux * g.conj() * np.roll(g, -1, axis=0)
        op2.uy = op.uy * g.conj() * np.roll(g, -1, axis=1)
        psi = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
        # H' = G* H G with G = diag(g)
        lhs = op2.apply(psi)
        rhs = g.conj().ravel() * op.apply(g.ravel() * psi)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(rhs).max())
        np.testing.assert_allclose(lowest_eigenpairs(op2, k=2).values, lam, rtol=1e-12)


def test_continuum_gauge_change(radial):
    # A -> A + grad chi changes the lattice operator only through quadrature error
    from magwkb.field import build_gauge
    from magwkb.series import eval_complex
    g = build_gauge(radial)

    def shifted(X, Y):
        A1 = np.real(eval_complex(g.A1, (X, Y))) + 0.3 * np.cos(X) * Y
        A2 = np.real(eval_complex(g.A2, (X, Y))) + 0.3 * np.sin(X)
        return A1, A2

    h, M = 0.1, 64
    base = lowest_eigenpairs(build_discrete_operator(radial, h, M=M, gauge=g), k=2).values
    moved = lowest_eigenpairs(build_discrete_operator(radial, h, M=M, potential=shifted),
                              k=2, sigma=0.9 * h).values
    np.testing.assert_allclose(moved, base, rtol=2e-3)


def test_dirichlet_monotone_in_domain(radial):
    s = 2.0 / 32
    small = build_discrete_operator(radial, 0.1, L=1.0, M=33)
    big = build_discrete_operator(radial, 0.1, L=1.5, M=49)
    assert big.spacing == pytest.approx(s) and small.spacing == pytest.approx(s)
    assert lowest_eigenpairs(big, k=1).values[0] <= lowest_eigenpairs(small, k=1).values[0]


@pytest.mark.slow
def test_constant_field_lowest_level():
    h = 0.01
    op = build_discrete_operator(None, h, L=0.6, M=160, potential=landau)
    lam = lowest_eigenpairs(op, k=1, sigma=0.9 * h).values[0]
    assert lam / h == pytest.approx(1.0, rel=0.02)


def test_overlap_basics(rng):
    x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    assert overlap(x, 3j * x) == pytest.approx(1.0)
    e = np.eye(50)
    assert overlap(e[0], e[1]) == 0
    assert overlap(x, np.zeros(50)) == 0


def test_cutoff():
    r = np.linspace(0, 2, 201)
    c = cutoff(r, 1.0)
    assert np.all(c[r <= 0.5] == 1) and np.all(c[r >= 1] == 0)
    assert np.all(np.diff(c) <= 0)


def test_no_convergence_raises(radial):
    op = build_discrete_operator(radial, 0.1, M=60)
    with pytest.raises(EigenNoConvergence):
        lowest_eigenpairs(op, k=1, tol=1e-30, max_refine=1)


def test_richardson_and_fit_on_synthetic_sweep():
    f = field_from_coeffs(ANISO, 8)
    mu = [4.5, 8.5]
    pts = []
    for h in (0.1, 0.07, 0.05, 0.035, 0.025):
        exact = np.array([h + m * h * h + 0.7 * h ** 3 for m in mu])
        err = lambda M: 3.0 / (M - 1) ** 2
        pts.append(SweepPoint(h=h, M=101, M_ref=51, eigenvalues=exact * (1 + err(101)),
                              eigenvalues_ref=exact * (1 + err(51)), residuals=np.zeros(2)))
    rep = compare_eigenvalues(pts, f)
    np.testing.assert_allclose(rep.fitted_mu1, mu, rtol=1e-8)
    assert rep.gap_coefficient == pytest.approx(4.0, rel=1e-8)
    np.testing.assert_allclose(rep.eigenvalues_used, [p.eigenvalues / (1 + 3e-4) for p in pts],
                               rtol=1e-12)
    with pytest.raises(ValidatorError):
        compare_eigenvalues(pts[:3], f)


def test_degenerate_cluster_uses_block_iteration():
    h = 0.02
    op = build_discrete_operator(None, h, L=1.0, M=64, potential=landau)
    ep = lowest_eigenpairs(op, k=2, sigma=0.95 * h)
    assert ep.method == "block-inverse"
    assert ep.residuals.max() <= 1e-8
    np.testing.assert_allclose(ep.values / h, 1.0, rtol=0.01)

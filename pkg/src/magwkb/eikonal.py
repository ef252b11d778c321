"""Eikonal branch ``w(z)``, holomorphic correction ``f`` and the phase ``S = phi + f``."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, NoConvergence
from .field import complexify, realify
from .series import (TruncatedSeries1, TruncatedSeries2, antiderive, derive, divide_unit,
                     sqrt_unit, substitute_w)


@dataclass(frozen=True)
class TaylorSplit:
    """``B~ - b0 = a~ X1^2 + 2 b~ X1 X2 + g~ X2^2`` in complexified variables."""

    alpha: TruncatedSeries2
    beta: TruncatedSeries2
    gamma: TruncatedSeries2


@dataclass(frozen=True)
class PhaseData:
    w_of_z: TruncatedSeries1
    f: TruncatedSeries1
    S_real: TruncatedSeries2
    v_tilde: TruncatedSeries2
    S_tilde: TruncatedSeries2

    @property
    def cap(self):
        return self.w_of_z.cap


def taylor_split(field):
    """Group the monomials of ``B - b0`` by their ``x1`` exponent, then complexify."""
    c = field.B_series.coeffs
    n = field.cap
    a = np.zeros_like(c)
    b = np.zeros_like(c)
    g = np.zeros_like(c)
    for i, j in zip(*np.nonzero(c)):
        if i + j < 2:
            continue
        if i >= 2:
            a[i - 2, j] += c[i, j]
        elif i == 1:
            b[0, j - 1] += 0.5 * c[i, j]
        else:
            g[0, j - 2] += c[i, j]
    return TaylorSplit(*(complexify(TruncatedSeries2(arr, n)) for arr in (a, b, g)))


def split_residual(split, field, B_tilde=None):
    """Max coefficient of ``a X1^2 + 2 b X1 X2 + g X2^2 - (B~ - b0)``."""
    n = field.cap
    z = TruncatedSeries2.variable(0, n)
    w = TruncatedSeries2.variable(1, n)
    X1 = 0.5 * (z + w)
    X2 = (z - w) * (-0.5j)
    if B_tilde is None:
        B_tilde = complexify(field.B_series)
    recon = split.alpha * X1 * X1 + 2 * split.beta * X1 * X2 + split.gamma * X2 * X2
    return (recon - (B_tilde - field.b0)).max_abs()


def _branch_factors(split):
    root = sqrt_unit(split.alpha * split.gamma - split.beta * split.beta)
    den = split.alpha + 1j * split.beta + root
    num = split.alpha - 1j * split.beta - root
    return num, den


def slope_at_origin(alpha, gamma):
    sa, sg = math.sqrt(alpha), math.sqrt(gamma)
    return (sg - sa) / (sg + sa)


def solve_eikonal(split, field, seed_scale=1.0, tol=1e-13):
    """Fixed point ``w <- -z N(z, w) / D(z, w)`` on the branch with ``D(0) = a + sqrt(a g)``.

    Every pass fixes at least one more Taylor coefficient, so the iteration
    is exact after about ``cap`` passes; ``NoConvergence`` after ``cap + 2``.
    """
    n = field.cap
    num, den = _branch_factors(split)
    d0 = den.constant_term()
    if not (d0.real > 0 and abs(d0.imag) <= 1e-12 * abs(d0)):
        raise NoConvergence(f"branch denominator at the origin is {d0}, expected > 0")
    z = TruncatedSeries1.variable(n)
    w = z * (seed_scale * slope_at_origin(field.alpha, field.gamma))
    deltas = []
    for it in range(n + 2):
        w_new = -(substitute_w(num, w) / substitute_w(den, w)).shift(1)
        delta = (w_new - w).max_abs()
        deltas.append(delta)
        w = w_new
        if delta <= tol * max(1.0, w.max_abs()):
            return w
    raise NoConvergence(
        f"eikonal fixed point did not stabilize in {n + 2} passes; last changes "
        + ", ".join(f"{d:.2e}" for d in deltas[-3:]))


def compute_f(phi_tilde, w_of_z):
    """``f(z) = -2 int_0^z d_z phi~(t, w(t)) dt``."""
    fp = substitute_w(derive(phi_tilde, 0), w_of_z) * (-2.0)
    f = antiderive(fp, 0)
    scale = max(phi_tilde.max_abs(), 1.0)
    if abs(f[1]) > 1e-11 * scale:
        raise InvariantViolation("f'(0) = 0", abs(f[1]), 1e-11 * scale, module="eikonal")
    return f


def _rel(series, ref):
    return series.max_abs() / max(ref, 1e-300)


def assemble_phase(gauge, field, w_of_z, f, check=True):
    n = field.cap
    f2 = TruncatedSeries2.from_univariate(f, 0)
    fp2 = TruncatedSeries2.from_univariate(derive(f, 0), 0)
    S_tilde = gauge.phi_tilde + f2
    S_real = realify(S_tilde)
    v_tilde = derive(gauge.phi_tilde, 0) * 8.0 + fp2 * 4.0
    phase = PhaseData(w_of_z=w_of_z, f=f, S_real=S_real, v_tilde=v_tilde, S_tilde=S_tilde)
    if check:
        check_phase(phase, gauge, field)
    return phase


def check_phase(phase, gauge, field):
    """Raise :class:`InvariantViolation` naming the first failing invariant."""
    n = field.cap
    b0, a, g = field.b0, field.alpha, field.gamma
    w = phase.w_of_z
    slope = slope_at_origin(a, g)

    def fail(name, value, tol):
        raise InvariantViolation(name, value, tol, module="eikonal")

    if abs(w[0]) > 1e-10:
        fail("w(0) = 0", abs(w[0]), 1e-10)
    if abs(w[1] - slope) > 1e-10:
        fail("w'(0) = (sqrt g - sqrt a)/(sqrt g + sqrt a)", abs(w[1] - slope), 1e-10)
    eik = substitute_w(gauge.B_tilde, w) - b0
    r = _rel(eik, gauge.B_tilde.max_abs())
    if r > 1e-11:
        fail("B~(z, w(z)) = b0", r, 1e-11)
    stat = substitute_w(phase.v_tilde, w).truncated(n - 1)
    r = _rel(stat, phase.v_tilde.max_abs())
    if r > 1e-11:
        fail("v~(z, w(z)) = 0", r, 1e-11)
    dw = (substitute_w(derive(phase.v_tilde, 1), w) - 2 * b0).truncated(n - 2)
    r = _rel(dw, 2 * b0)
    if r > 1e-11:
        fail("d_w v~(z, w(z)) = 2 b0", r, 1e-11)
    q = phase.S_real.coeffs.real
    sa, sg = math.sqrt(a), math.sqrt(g)
    want = (0.5 * b0 * sa / (sa + sg), 0.5 * b0 * sg / (sa + sg))
    err = max(abs(q[2, 0] - want[0]), abs(q[0, 2] - want[1]), abs(q[1, 1]))
    if err > 1e-10 * max(1.0, b0):
        fail("quadratic part of Re S", err, 1e-10)
    if not (q[2, 0] > 0 and q[0, 2] > 0 and 4 * q[2, 0] * q[0, 2] > q[1, 1] ** 2):
        fail("Re S quadratic form positive definite", 0.0, 0.0)


def build_phase(field, gauge, seed_scale=1.0):
    split = taylor_split(field)
    w = solve_eikonal(split, field, seed_scale=seed_scale)
    f = compute_f(gauge.phi_tilde, w)
    return assemble_phase(gauge, field, w, f)

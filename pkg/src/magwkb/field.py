"""Magnetic field ingestion, normalization and the divergence-free gauge.

Real-coordinate series use ``(x1, x2)`` as their two variables; complexified
series use ``(z, w)`` with ``x1 = (z + w)/2`` and ``x2 = (z - w)/(2i)``.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (DegenerateMinimum, GaugeConsistencyError, NonPositiveMinimumValue,
                     NotCriticalAtOrigin)
from .series import STRUCTURAL_ZERO, TruncatedSeries2, antiderive, derive, linear_change

#: ``a~(z, w) = a((z + w)/2, (z - w)/(2i))``
COMPLEXIFY = ((0.5, 0.5), (-0.5j, 0.5j))
#: inverse: ``z = x1 + i x2``, ``w = x1 - i x2``
REALIFY = ((1.0, 1j), (1.0, -1j))


def complexify(a):
    return linear_change(a, COMPLEXIFY)


def realify(a):
    return linear_change(a, REALIFY)


def laplacian(a):
    return derive(derive(a, 0), 0) + derive(derive(a, 1), 1)


def load_field(raw_coeffs, cap):
    """Dense real series from a ``{(i, j): value}`` map; missing entries are zero."""
    terms = {}
    for (i, j), v in dict(raw_coeffs).items():
        i, j = int(i), int(j)
        if i < 0 or j < 0:
            raise ValueError(f"negative exponent in field coefficient {(i, j)}")
        if float(np.imag(v)) != 0.0:
            raise ValueError("magnetic field coefficients must be real")
        terms[(i, j)] = terms.get((i, j), 0.0) + float(np.real(v))
    b0 = terms.get((0, 0), 0.0)
    if not b0 > 0:
        raise NonPositiveMinimumValue(
            f"field value at the origin must be positive, got {b0!r}")
    return TruncatedSeries2.from_dict(terms, cap)


def parse_coeff_list(items):
    """``[[i, j, value], ...]`` -> ``{(i, j): value}`` (duplicates add up)."""
    out = {}
    for entry in items:
        if len(entry) != 3:
            raise ValueError(f"field coefficient entries are [i, j, value], got {entry!r}")
        i, j, v = entry
        if int(i) != i or int(j) != j:
            raise ValueError(f"exponents must be integers, got {entry!r}")
        out[(int(i), int(j))] = out.get((int(i), int(j)), 0.0) + float(v)
    return out


def load_field_json(source):
    """Read a field file ``{"coeffs": [[i, j, value], ...], "degree_cap": N}``.

    ``source`` is a path or an already-decoded mapping.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            source = json.load(fh)
    try:
        coeffs = parse_coeff_list(source["coeffs"])
        cap = int(source["degree_cap"])
    except KeyError as exc:
        raise ValueError(f"field document is missing key {exc.args[0]!r}") from None
    return load_field(coeffs, cap)


@dataclass(frozen=True)
class MagneticField:
    """Field normalized so that ``B = b0 + alpha x1^2 + gamma x2^2 + O(|x|^3)``.

    ``rotation_angle`` is the angle ``t`` with ``y = R(t) x``: the stored
    series is the raw field composed with ``x = R(-t) y``.
    """

    b0: float
    alpha: float
    gamma: float
    rotation_angle: float
    B_series: TruncatedSeries2

    @property
    def cap(self):
        return self.B_series.cap

    def check(self, tol=STRUCTURAL_ZERO):
        c = self.B_series.coeffs
        scale = max(self.B_series.max_abs(), 1.0)
        assert self.B_series.is_real(0.0)
        assert c[0, 0] == self.b0 and self.b0 > 0
        assert abs(c[1, 0]) <= tol * scale and abs(c[0, 1]) <= tol * scale
        assert c[1, 1] == 0 and c[2, 0] == self.alpha and c[0, 2] == self.gamma
        assert 0 < self.alpha <= self.gamma

    def evaluate(self, x1, x2):
        from .series import eval_complex
        return np.real(eval_complex(self.B_series, (x1, x2)))


def _hessian_rotation(b20, b11, b02, thr):
    """Half-Hessian eigenvalues (alpha <= gamma) and the normalizing angle."""
    mean = 0.5 * (b20 + b02)
    rad = math.hypot(0.5 * (b20 - b02), 0.5 * b11)
    alpha, gamma = mean - rad, mean + rad
    if abs(b11) <= thr:
        return (b20, b02, 0.0) if b20 <= b02 else (b02, b20, 0.5 * math.pi)
    if rad <= thr:
        return alpha, gamma, 0.0
    gamma_dir = 0.5 * math.atan2(b11, b20 - b02)
    theta = -(gamma_dir + 0.5 * math.pi)
    theta = (theta + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    if theta <= -0.5 * math.pi:
        theta += math.pi
    return alpha, gamma, theta


def normalize_field(raw):
    """Rotate coordinates to diagonalize the Hessian at the origin (alpha <= gamma)."""
    c = raw.coeffs
    if not raw.is_real(0.0):
        raise ValueError("magnetic field series must have real coefficients")
    c = c.real
    b0 = float(c[0, 0])
    if not b0 > 0:
        raise NonPositiveMinimumValue(f"field minimum value must be positive, got {b0!r}")
    scale = max(float(np.max(np.abs(c))), 1e-300)
    thr = STRUCTURAL_ZERO * scale
    if raw.cap < 2:
        raise DegenerateMinimum("degree cap < 2 cannot carry a non-degenerate minimum")
    if abs(c[1, 0]) > thr or abs(c[0, 1]) > thr:
        raise NotCriticalAtOrigin(
            f"gradient at the origin is ({c[1, 0]:.3e}, {c[0, 1]:.3e}); "
            "the minimum must sit at (0, 0)")
    alpha, gamma, theta = _hessian_rotation(c[2, 0], c[1, 1], c[0, 2], thr)
    hess_tol = 1e-10 * max(b0, abs(gamma), 1e-300)
    if alpha <= hess_tol:
        raise DegenerateMinimum(
            f"half-Hessian eigenvalues ({alpha:.3e}, {gamma:.3e}) are not both positive")
    if theta == 0.0:
        arr = c.copy()
    else:
        ct, st = math.cos(theta), math.sin(theta)
        arr = linear_change(raw, ((ct, st), (-st, ct))).coeffs.real.copy()
    arr[1, 0] = arr[0, 1] = arr[1, 1] = 0.0
    arr[2, 0], arr[0, 2] = alpha, gamma
    arr[0, 0] = b0
    field = MagneticField(b0=b0, alpha=float(alpha), gamma=float(gamma),
                          rotation_angle=float(theta),
                          B_series=TruncatedSeries2(arr, raw.cap))
    field.check()
    return field


def field_from_coeffs(coeffs, cap):
    if isinstance(coeffs, (list, tuple)):
        coeffs = parse_coeff_list(coeffs)
    return normalize_field(load_field(coeffs, cap))


# ---------------------------------------------------------------------------
# gauge
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaugeData:
    phi: TruncatedSeries2
    A1: TruncatedSeries2
    A2: TruncatedSeries2
    phi_tilde: TruncatedSeries2
    B_tilde: TruncatedSeries2


def _poisson_monomial(m, n, out, weight):
    # ascending-x1 particular solution of  Delta P = x1^m x2^n
    c = 1.0 / ((m + 1) * (m + 2))
    k = 0
    while True:
        p, q = m + 2 + 2 * k, n - 2 * k
        if p + q < out.shape[0]:
            out[p, q] += weight * c
        k += 1
        if n - 2 * k < 0:
            break
        c = -c * (n - 2 * k + 2) * (n - 2 * k + 1) / ((m + 2 + 2 * k) * (m + 1 + 2 * k))


def poisson_particular_monomial(B):
    """Symmetrized monomial-wise particular solution of ``Delta phi = B``.

    Each monomial gets the average of the ascending-``x1`` solution and its
    ``x2`` mirror image.  This does not map rotation-invariant fields to
    rotation-invariant gauges, so :func:`build_gauge` uses
    :func:`poisson_complex` instead; kept for comparison.
    """
    n = B.cap
    c = B.coeffs
    p1 = np.zeros((n + 1, n + 1), dtype=complex)
    p2 = np.zeros((n + 1, n + 1), dtype=complex)
    for i, j in zip(*np.nonzero(c)):
        _poisson_monomial(i, j, p1, c[i, j])
        _poisson_monomial(j, i, p2, c[i, j])
    return TruncatedSeries2(0.5 * (p1 + p2.T), n)


def poisson_complex(B):
    """Particular solution ``phi~ = (1/4) int_0^z int_0^w B~`` of ``4 d_z d_w phi~ = B~``.

    Returns ``(phi, phi_tilde)``.  For real ``B`` the result is real, it
    commutes with rotations (a radial field gives a radial gauge), its
    quadratic part is ``b0 |x|^2 / 4`` and ``phi~`` has no pure powers of
    ``z`` or ``w``.
    """
    B_tilde = complexify(B)
    phi_tilde = antiderive(antiderive(B_tilde, 0), 1) * 0.25
    phi = realify(phi_tilde)
    if not phi.is_real(1e-12):
        raise GaugeConsistencyError("gauge phi came out complex")
    return TruncatedSeries2(phi.coeffs.real, B.cap), phi_tilde


def build_gauge(field):
    B = field.B_series
    n = B.cap
    phi, phi_tilde = poisson_complex(B)
    A1 = -derive(phi, 1)
    A2 = derive(phi, 0)
    scale = max(B.max_abs(), 1.0)
    lap_err = (laplacian(phi) - B).truncated(n - 2).max_abs()
    div_err = (derive(A1, 0) + derive(A2, 1)).max_abs()
    curl_err = (derive(A2, 0) - derive(A1, 1) - B).truncated(n - 2).max_abs()
    for name, err in (("laplacian phi = B", lap_err), ("div A = 0", div_err),
                      ("curl A = B", curl_err)):
        if err > 1e-12 * scale:
            raise GaugeConsistencyError(f"gauge invariant {name!r} violated by {err:.3e}")
    q = phi.coeffs
    if not (abs(q[2, 0] - field.b0 / 4) <= 1e-14 * scale
            and abs(q[0, 2] - field.b0 / 4) <= 1e-14 * scale and abs(q[1, 1]) <= 1e-14 * scale):
        raise GaugeConsistencyError("quadratic part of phi differs from b0 |x|^2 / 4")
    return GaugeData(phi=phi, A1=A1, A2=A2, phi_tilde=phi_tilde, B_tilde=complexify(B))

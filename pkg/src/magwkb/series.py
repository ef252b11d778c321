"""Truncated complex Taylor series in one variable ``z`` or two variables ``(z, w)``.

Every value carries an explicit degree cap ``N``; arithmetic never extends
it, and all results are truncated to total degree ``<= N``.  Coefficients
are double-precision complex.

Bivariate coefficients are kept in a square ``(N+1, N+1)`` array whose
entries with ``i + j > N`` are identically zero; ``coeffs[i, j]`` multiplies
``z**i * w**j``.  Internally many recurrences run on the *graded* form, the
list of homogeneous parts, where the degree-``d`` part is a length ``d+1``
array indexed by the exponent of the first variable.

Derivatives lose the top degree: ``derive`` of a series known to degree
``N`` is only known to degree ``N-1``; its coefficient slots of degree
``N`` are zero.  ``antiderive`` drops the degree-``N`` terms of its input,
which would land on degree ``N+1``.
"""

from functools import lru_cache
from numbers import Number

import numpy as np

from . import kernels
from .errors import (ArityMismatch, BranchUndefined, CapMismatch,
                     ConstantTermNonzero, NearSingularDivision,
                     ValuationMismatch)

#: Relative threshold under which a coefficient counts as a structural zero.
STRUCTURAL_ZERO = 1e-11

_VAR_NAMES = {"z": 0, "x1": 0, "w": 1, "u": 1, "x2": 1}


def _axis(var):
    if isinstance(var, str):
        try:
            return _VAR_NAMES[var]
        except KeyError:
            raise ValueError(f"unknown variable {var!r}") from None
    if var not in (0, 1):
        raise ValueError(f"variable index must be 0 or 1, got {var!r}")
    return int(var)


@lru_cache(maxsize=None)
def _mask(n):
    i, j = np.indices((n + 1, n + 1))
    m = (i + j) <= n
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def _antidiagonals(n):
    out = []
    for d in range(n + 1):
        i = np.arange(d + 1)
        out.append((i, d - i))
    return tuple(out)


class _Series:
    nvars = 0
    __slots__ = ("coeffs", "cap")

    # -- construction -------------------------------------------------------

    @classmethod
    def _wrap(cls, arr, cap):
        obj = object.__new__(cls)
        arr.setflags(write=False)
        obj.coeffs = arr
        obj.cap = cap
        return obj

    @classmethod
    def zero(cls, cap):
        return cls(np.zeros(cls._shape(cap), dtype=complex), cap)

    @classmethod
    def constant(cls, value, cap):
        arr = np.zeros(cls._shape(cap), dtype=complex)
        arr[(0,) * cls.nvars] = value
        return cls(arr, cap)

    @classmethod
    def one(cls, cap):
        return cls.constant(1.0, cap)

    # -- basic queries ------------------------------------------------------

    def __repr__(self):
        return f"{type(self).__name__}(cap={self.cap}, {self._terms_repr()})"

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def constant_term(self):
        return complex(self.coeffs[(0,) * self.nvars])

    def is_real(self, tol=1e-13):
        scale = max(self.max_abs(), 1e-300)
        return float(np.max(np.abs(self.coeffs.imag))) <= tol * scale

    def zero_threshold(self):
        return STRUCTURAL_ZERO * self.max_abs()

    def _check_compatible(self, other):
        if not isinstance(other, _Series) or other.nvars != self.nvars:
            raise ArityMismatch(
                f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.cap != self.cap:
            raise CapMismatch(f"degree caps differ: {self.cap} vs {other.cap}")

    # -- graded form ----------------------------------------------------------

    def parts(self):
        """Homogeneous parts as a list of 1-D arrays (see module docstring)."""
        raise NotImplementedError

    @classmethod
    def from_parts(cls, parts, cap):
        raise NotImplementedError

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self):
        return self._wrap(-self.coeffs, self.cap)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Number):
            return self + type(self).constant(other, self.cap)
        self._check_compatible(other)
        return self._wrap(self.coeffs + other.coeffs, self.cap)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return self._wrap(self.coeffs * other, self.cap)
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self._wrap(self.coeffs * other, self.cap)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self._wrap(self.coeffs / other, self.cap)
        return divide_unit(self, other)

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = type(self).one(self.cap)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def allclose(self, other, rtol=1e-12, atol=0.0, degree=None):
        self._check_compatible(other)
        diff = (self - other).truncated(degree) if degree is not None else self - other
        scale = max(self.max_abs(), other.max_abs())
        return diff.max_abs() <= atol + rtol * scale


class TruncatedSeries1(_Series):
    """Univariate truncated series ``sum_k c_k z**k``, ``k <= cap``."""

    nvars = 1
    __slots__ = ()

    def __init__(self, coeffs, cap=None):
        arr = np.array(coeffs, dtype=complex).ravel()
        if cap is None:
            cap = arr.size - 1
        if cap < 0:
            raise ValueError("degree cap must be >= 0")
        if arr.size > cap + 1:
            raise CapMismatch(f"{arr.size} coefficients exceed cap {cap}")
        full = np.zeros(cap + 1, dtype=complex)
        full[: arr.size] = arr
        full.setflags(write=False)
        self.coeffs = full
        self.cap = int(cap)

    @staticmethod
    def _shape(cap):
        return (cap + 1,)

    @classmethod
    def variable(cls, cap):
        arr = np.zeros(cap + 1, dtype=complex)
        if cap >= 1:
            arr[1] = 1.0
        return cls(arr, cap)

    def _terms_repr(self):
        return np.array2string(self.coeffs, precision=6)

    def __len__(self):
        return self.cap + 1

    def __getitem__(self, k):
        return complex(self.coeffs[k]) if 0 <= k <= self.cap else 0j

    def parts(self):
        return [self.coeffs[d:d + 1] for d in range(self.cap + 1)]

    @classmethod
    def from_parts(cls, parts, cap):
        arr = np.zeros(cap + 1, dtype=complex)
        for d, p in enumerate(parts[: cap + 1]):
            arr[d] = p[0]
        return cls._wrap(arr, cap)

    def valuation(self, var=0, threshold=None):
        _axis(var)
        thr = self.zero_threshold() if threshold is None else threshold
        nz = np.nonzero(np.abs(self.coeffs) > thr)[0]
        return int(nz[0]) if nz.size else self.cap + 1

    def truncated(self, degree):
        arr = self.coeffs.copy()
        arr[max(degree + 1, 0):] = 0
        return self._wrap(arr, self.cap)

    def shift(self, k):
        """Multiply by ``z**k`` (``k >= 0``) or drop the first ``-k`` terms."""
        arr = np.zeros(self.cap + 1, dtype=complex)
        if k >= 0:
            arr[k:] = self.coeffs[: self.cap + 1 - k]
        else:
            arr[: self.cap + 1 + k] = self.coeffs[-k:]
        return self._wrap(arr, self.cap)

    def to_bivariate(self, var=0):
        return TruncatedSeries2.from_univariate(self, var)

    def with_cap(self, cap):
        arr = np.zeros(cap + 1, dtype=complex)
        m = min(cap, self.cap) + 1
        arr[:m] = self.coeffs[:m]
        return self._wrap(arr, cap)


class TruncatedSeries2(_Series):
    """Bivariate truncated series ``sum c_ij z**i w**j`` with ``i + j <= cap``."""

    nvars = 2
    __slots__ = ()

    def __init__(self, coeffs, cap=None):
        arr = np.array(coeffs, dtype=complex)
        if arr.ndim != 2:
            raise ValueError("bivariate coefficients must be a 2-D array")
        if cap is None:
            cap = max(arr.shape) - 1
        i, j = np.indices(arr.shape)
        if np.any(arr[(i + j) > cap] != 0):
            raise CapMismatch(f"coefficients beyond total degree {cap}")
        full = np.zeros((cap + 1, cap + 1), dtype=complex)
        r, c = min(arr.shape[0], cap + 1), min(arr.shape[1], cap + 1)
        full[:r, :c] = arr[:r, :c]
        full.setflags(write=False)
        self.coeffs = full
        self.cap = int(cap)

    @staticmethod
    def _shape(cap):
        return (cap + 1, cap + 1)

    @classmethod
    def variable(cls, var, cap):
        arr = np.zeros((cap + 1, cap + 1), dtype=complex)
        if cap >= 1:
            arr[(1, 0) if _axis(var) == 0 else (0, 1)] = 1.0
        return cls(arr, cap)

    @classmethod
    def from_dict(cls, terms, cap):
        arr = np.zeros((cap + 1, cap + 1), dtype=complex)
        for (i, j), v in terms.items():
            if i + j <= cap:
                arr[i, j] += v
        return cls(arr, cap)

    @classmethod
    def from_univariate(cls, s, var=0):
        arr = np.zeros((s.cap + 1, s.cap + 1), dtype=complex)
        if _axis(var) == 0:
            arr[:, 0] = s.coeffs
        else:
            arr[0, :] = s.coeffs
        return cls._wrap(arr, s.cap)

    def _terms_repr(self):
        items = [f"({i},{j}):{self.coeffs[i, j]:.6g}"
                 for i, j in zip(*np.nonzero(self.coeffs))]
        return "{" + ", ".join(items[:12]) + (", ..." if len(items) > 12 else "") + "}"

    def __getitem__(self, ij):
        i, j = ij
        if i < 0 or j < 0 or i + j > self.cap:
            return 0j
        return complex(self.coeffs[i, j])

    def to_dict(self, threshold=0.0):
        return {(int(i), int(j)): complex(self.coeffs[i, j])
                for i, j in zip(*np.nonzero(np.abs(self.coeffs) > threshold))}

    def parts(self):
        return [self.coeffs[idx] for idx in _antidiagonals(self.cap)]

    @classmethod
    def from_parts(cls, parts, cap):
        arr = np.zeros((cap + 1, cap + 1), dtype=complex)
        for idx, p in zip(_antidiagonals(cap), parts[: cap + 1]):
            arr[idx] = p
        return cls._wrap(arr, cap)

    def valuation(self, var, threshold=None):
        ax = _axis(var)
        thr = self.zero_threshold() if threshold is None else threshold
        big = np.abs(self.coeffs) > thr
        lines = np.nonzero(big.any(axis=1 - ax))[0]
        return int(lines[0]) if lines.size else self.cap + 1

    def total_valuation(self, threshold=None):
        thr = self.zero_threshold() if threshold is None else threshold
        for d, p in enumerate(self.parts()):
            if np.any(np.abs(p) > thr):
                return d
        return self.cap + 1

    def truncated(self, degree):
        arr = self.coeffs.copy()
        i, j = np.indices(arr.shape)
        arr[(i + j) > degree] = 0
        return self._wrap(arr, self.cap)

    def shift(self, var, k):
        """Multiply by ``var**k`` (``k >= 0``) or divide off ``var**(-k)`` by dropping terms."""
        ax = _axis(var)
        n = self.cap
        arr = np.zeros((n + 1, n + 1), dtype=complex)
        src = self.coeffs if ax == 0 else self.coeffs.T
        dst = arr if ax == 0 else arr.T
        if k >= 0:
            dst[k:, :] = src[: n + 1 - k, :]
        else:
            dst[: n + 1 + k, :] = src[-k:, :]
        arr[~_mask(n)] = 0
        return self._wrap(arr, n)

    def restrict(self, var, value=0.0):
        """Set one variable to a constant; returns a univariate series in the other.

        Only ``value = 0`` preserves exact truncation; other values sum the
        truncated tail as it stands.
        """
        ax = _axis(var)
        if value == 0:
            line = self.coeffs[:, 0] if ax == 1 else self.coeffs[0, :]
        else:
            powers = value ** np.arange(self.cap + 1)
            line = self.coeffs @ powers if ax == 1 else powers @ self.coeffs
        return TruncatedSeries1._wrap(np.array(line, dtype=complex), self.cap)

    def swap(self):
        """Exchange the roles of the two variables."""
        return self._wrap(self.coeffs.T.copy(), self.cap)

    def with_cap(self, cap):
        arr = np.zeros((cap + 1, cap + 1), dtype=complex)
        m = min(cap, self.cap) + 1
        arr[:m, :m] = self.coeffs[:m, :m]
        arr[~_mask(cap)] = 0
        return self._wrap(arr, cap)


Series = (TruncatedSeries1, TruncatedSeries2)


# ---------------------------------------------------------------------------
# ring operations
# ---------------------------------------------------------------------------

def linear_combine(terms):
    """``sum(c * s for c, s in terms)``; all series must share arity and cap."""
    terms = list(terms)
    if not terms:
        raise ValueError("linear_combine needs at least one term")
    first = terms[0][1]
    acc = np.zeros_like(first.coeffs)
    for c, s in terms:
        first._check_compatible(s)
        acc = acc + c * s.coeffs
    return first._wrap(acc, first.cap)


def multiply(a, b):
    """Cauchy product truncated to the common cap."""
    a._check_compatible(b)
    n = a.cap
    if a.nvars == 1:
        out = kernels.trunc_mul1(np.ascontiguousarray(a.coeffs),
                                 np.ascontiguousarray(b.coeffs), n)
    else:
        out = kernels.trunc_mul2(np.ascontiguousarray(a.coeffs),
                                 np.ascontiguousarray(b.coeffs), n)
        out[~_mask(n)] = 0
    return a._wrap(np.asarray(out), n)


def _graded_divide(num_parts, den_parts, n):
    d0 = den_parts[0][0]
    q = []
    for d in range(n + 1):
        acc = np.array(num_parts[d], dtype=complex)
        for k in range(1, d + 1):
            if den_parts[k].any():
                acc = acc - np.convolve(den_parts[k], q[d - k])
        q.append(acc / d0)
    return q


def divide_unit(num, den, tol=None):
    """Quotient ``q`` with ``q * den == num`` to the cap; ``den(0)`` must be a unit.

    Raises :class:`NearSingularDivision` when ``|den(0)|`` is below
    ``tol`` (default: the structural-zero threshold of ``den``).
    """
    num._check_compatible(den)
    d0 = den.constant_term()
    thr = den.zero_threshold() if tol is None else tol
    if abs(d0) <= thr or d0 == 0:
        raise NearSingularDivision(f"constant term {d0:.3e} of the divisor is not a unit")
    if num.nvars == 1:
        n = num.cap
        a, b = num.coeffs, den.coeffs
        q = np.zeros(n + 1, dtype=complex)
        for k in range(n + 1):
            q[k] = (a[k] - np.dot(b[1:k + 1], q[k - 1::-1][:k])) / d0
        return TruncatedSeries1._wrap(q, n)
    parts = _graded_divide(num.parts(), den.parts(), num.cap)
    return TruncatedSeries2.from_parts(parts, num.cap)


def divide_exact(num, den, var=0, tol=None, check=True, num_threshold=None):
    """Holomorphic quotient when ``den`` vanishes to order ``v`` in ``var``.

    Both operands are divided by ``var**v`` (``v`` = valuation of ``den``),
    after which the cofactor of ``den`` must have a unit constant term.  The
    quotient is reliable to degree ``cap - v``.  Low-order coefficients of
    ``num`` below ``num_threshold`` (default: its structural-zero threshold)
    are treated as exact zeros and discarded.
    """
    num._check_compatible(den)
    v = den.valuation(var)
    vn = num.valuation(var, threshold=num_threshold)
    if vn < v:
        if num.nvars == 1:
            lead = num[vn]
        else:
            line = num.coeffs[vn, :] if _axis(var) == 0 else num.coeffs[:, vn]
            lead = complex(line[np.argmax(np.abs(line))])
        raise ValuationMismatch(
            f"numerator valuation {vn} in {var!r} is below divisor valuation {v}; "
            f"leading coefficient {lead:.6g}", leading_coefficient=lead, degree=vn)
    if v > num.cap:
        raise NearSingularDivision("divisor is structurally zero")
    if num.nvars == 1:
        n_s, d_s = num.shift(-v), den.shift(-v)
    else:
        n_s, d_s = num.shift(var, -v), den.shift(var, -v)
    if abs(d_s.constant_term()) <= d_s.zero_threshold():
        raise NearSingularDivision(
            "after removing the common power the divisor has no unit constant term")
    q = divide_unit(n_s, d_s, tol=tol)
    if check:
        resid = (num - q * den).truncated(num.cap - v)
        scale = max(num.max_abs(), 1e-300)
        if resid.max_abs() > 1e-8 * scale:
            raise ValuationMismatch(
                f"exact division residual {resid.max_abs() / scale:.3e} too large")
    return q


def sqrt_unit(a):
    """Principal square root; requires ``Re a(0) > 0``."""
    a0 = a.constant_term()
    if a0.real <= 0 or abs(a0) <= max(a.zero_threshold(), 1e-300):
        raise BranchUndefined(f"constant term {a0:.3e} outside the principal-branch domain")
    s0 = np.sqrt(a0)
    n = a.cap
    ap = a.parts()
    s = [np.array([s0]) if a.nvars == 1 else np.array([s0], dtype=complex)]
    for d in range(1, n + 1):
        acc = np.array(ap[d], dtype=complex)
        for k in range(1, d):
            acc = acc - np.convolve(s[k], s[d - k])
        s.append(acc / (2 * s0))
    return type(a).from_parts(s, n)


def exp_series(a):
    """Exponential via the Euler-operator recurrence ``d e_d = sum_k k a_k e_{d-k}``."""
    n = a.cap
    ap = a.parts()
    e = [np.array([np.exp(a.constant_term())], dtype=complex)]
    for d in range(1, n + 1):
        acc = np.zeros(d + 1 if a.nvars == 2 else 1, dtype=complex)
        for k in range(1, d + 1):
            if ap[k].any():
                acc = acc + k * np.convolve(ap[k], e[d - k])
        e.append(acc / d)
    return type(a).from_parts(e, n)


def log_unit(a):
    """Logarithm of a series with unit constant term (principal branch)."""
    a0 = a.constant_term()
    if a0 == 0:
        raise BranchUndefined("log of a series with zero constant term")
    n = a.cap
    ap = a.parts()
    lg = [np.array([np.log(a0)], dtype=complex)]
    # d a_d = sum_k k l_k a_{d-k}  (Euler operator on a = exp(l))
    for d in range(1, n + 1):
        acc = d * np.array(ap[d], dtype=complex)
        for k in range(1, d):
            acc = acc - k * np.convolve(lg[k], ap[d - k])
        lg.append(acc / (d * a0))
    return type(a).from_parts(lg, n)


def derive(a, var=0):
    ax = _axis(var)
    n = a.cap
    if a.nvars == 1:
        out = np.zeros(n + 1, dtype=complex)
        out[:n] = a.coeffs[1:] * np.arange(1, n + 1)
        return a._wrap(out, n)
    out = np.zeros((n + 1, n + 1), dtype=complex)
    k = np.arange(1, n + 1)
    if ax == 0:
        out[:n, :] = a.coeffs[1:, :] * k[:, None]
    else:
        out[:, :n] = a.coeffs[:, 1:] * k[None, :]
    return a._wrap(out, n)


def antiderive(a, var=0):
    """Term-by-term integral from 0 in ``var``; the integration constant is 0."""
    ax = _axis(var)
    n = a.cap
    if a.nvars == 1:
        out = np.zeros(n + 1, dtype=complex)
        out[1:] = a.coeffs[:n] / np.arange(1, n + 1)
        return a._wrap(out, n)
    out = np.zeros((n + 1, n + 1), dtype=complex)
    k = np.arange(1, n + 1)
    if ax == 0:
        out[1:, :] = a.coeffs[:n, :] / k[:, None]
    else:
        out[:, 1:] = a.coeffs[:, :n] / k[None, :]
    out[~_mask(n)] = 0
    return a._wrap(out, n)


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def _check_local(c, tol=None):
    c0 = c.constant_term()
    thr = max(c.zero_threshold(), 1e-14) if tol is None else tol
    if abs(c0) > thr:
        raise ConstantTermNonzero(f"substituted series has constant term {c0:.3e}")


def substitute_w(a, c):
    """Full substitution ``w <- c(z)``; returns the univariate ``a(z, c(z))``."""
    if not isinstance(a, TruncatedSeries2) or not isinstance(c, TruncatedSeries1):
        raise ArityMismatch("substitute_w takes a bivariate series and a univariate one")
    if a.cap != c.cap:
        raise CapMismatch(f"degree caps differ: {a.cap} vs {c.cap}")
    _check_local(c)
    n = a.cap
    acc = TruncatedSeries1._wrap(a.coeffs[:, n].copy(), n)
    for j in range(n - 1, -1, -1):
        acc = acc * c + TruncatedSeries1._wrap(a.coeffs[:, j].copy(), n)
    return acc


def recenter_w(a, c):
    """Recentring ``w <- c(z) + u``; returns ``a(z, c(z) + u)`` as a series in ``(z, u)``."""
    if not isinstance(a, TruncatedSeries2) or not isinstance(c, TruncatedSeries1):
        raise ArityMismatch("recenter_w takes a bivariate series and a univariate one")
    if a.cap != c.cap:
        raise CapMismatch(f"degree caps differ: {a.cap} vs {c.cap}")
    _check_local(c)
    n = a.cap
    shift = TruncatedSeries2.from_univariate(c, 0) + TruncatedSeries2.variable(1, n)

    def column(j):
        arr = np.zeros((n + 1, n + 1), dtype=complex)
        arr[:, 0] = a.coeffs[:, j]
        return TruncatedSeries2._wrap(arr, n)

    acc = column(n)
    for j in range(n - 1, -1, -1):
        acc = acc * shift + column(j)
    return acc


def compose_univariate(f, c):
    """``f(c(z))`` for univariate series with ``c(0) = 0``."""
    f._check_compatible(c)
    _check_local(c)
    n = f.cap
    acc = TruncatedSeries1.constant(f.coeffs[n], n)
    for k in range(n - 1, -1, -1):
        acc = acc * c + f.coeffs[k]
    return acc


@lru_cache(maxsize=64)
def _linear_change_matrices(m11, m12, m21, m22, n):
    # degree-d block maps old graded coefficients (index = power of first var)
    # to new graded coefficients
    l1 = np.array([m12, m11], dtype=complex)
    l2 = np.array([m22, m21], dtype=complex)
    p1 = [np.array([1.0 + 0j])]
    p2 = [np.array([1.0 + 0j])]
    for _ in range(n):
        p1.append(np.convolve(p1[-1], l1))
        p2.append(np.convolve(p2[-1], l2))
    mats = []
    for d in range(n + 1):
        m = np.empty((d + 1, d + 1), dtype=complex)
        for i in range(d + 1):
            m[:, i] = np.convolve(p1[i], p2[d - i])
        m.setflags(write=False)
        mats.append(m)
    return tuple(mats)


def linear_change(a, matrix):
    """Return ``b(y) = a(M y)`` for a 2x2 matrix ``M``; exact degree by degree."""
    (m11, m12), (m21, m22) = np.asarray(matrix, dtype=complex)
    mats = _linear_change_matrices(complex(m11), complex(m12), complex(m21),
                                   complex(m22), a.cap)
    parts = [mats[d] @ p for d, p in enumerate(a.parts())]
    return TruncatedSeries2.from_parts(parts, a.cap)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_complex(a, point):
    """Horner evaluation at a point (scalars or broadcastable arrays)."""
    if a.nvars == 1:
        z = np.asarray(point[0] if isinstance(point, tuple) else point, dtype=complex)
        acc = np.zeros_like(z) + a.coeffs[a.cap]
        for k in range(a.cap - 1, -1, -1):
            acc = acc * z + a.coeffs[k]
        return complex(acc) if acc.ndim == 0 else acc
    z, w = (np.asarray(p, dtype=complex) for p in point)
    z, w = np.broadcast_arrays(z, w)
    n = a.cap
    acc = np.zeros(z.shape, dtype=complex)
    for j in range(n, -1, -1):
        col = a.coeffs[: n + 1 - j, j]
        inner = np.zeros(z.shape, dtype=complex) + col[-1]
        for i in range(col.size - 2, -1, -1):
            inner = inner * z + col[i]
        acc = acc * w + inner
    return complex(acc) if acc.ndim == 0 else acc

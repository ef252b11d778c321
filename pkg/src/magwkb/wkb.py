"""Transport equations, the eigenvalue ladder ``mu_j`` and the amplitudes ``a_j``.

The amplitudes are built in recentered coordinates ``(z, u)`` with
``w = w(z) + u``, where the characteristic set ``{w = w(z)}`` becomes
``{u = 0}``.  In those coordinates

* ``d_w = d_u`` and ``d_z|_w = d_z|_u - w'(z) d_u``;
* the cyclotron transport operator ``v~ d_w + B~ - b0`` reads
  ``u (V(z, u) d_u + beta(z, u))`` with ``V(z, 0) = 2 b0``.

Public fields of :class:`WkbExpansion` are converted back to ``(z, w)``.
"""

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .errors import InvariantViolation, NoHomogeneousIndex, SolvabilityCoefficientVanished
from .field import build_gauge, realify
from .eikonal import build_phase
from .series import (STRUCTURAL_ZERO, TruncatedSeries1, TruncatedSeries2, antiderive, derive,
                     divide_exact, divide_unit, eval_complex, exp_series, recenter_w,
                     substitute_w)


# ---------------------------------------------------------------------------
# transport lemma
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransportProblem:
    """``(V d_z + F) f = g`` with ``V(0) = 0``, ``V'(0) != 0``."""

    V: TruncatedSeries1
    F: TruncatedSeries1
    g: TruncatedSeries1
    ell: int = 0


@dataclass(frozen=True)
class TransportSolution:
    homogeneous: TruncatedSeries1
    solvability_defect: complex
    particular: TruncatedSeries1
    G: TruncatedSeries1
    weight: TruncatedSeries1  # exp(-int G), the homogeneous solution without z^ell / ell!
    c: tuple  # solvability coefficients c_0 .. c_ell

    def __iter__(self):
        return iter((self.homogeneous, self.solvability_defect, self.particular))


INDEX_TOL = 1e-6


def transport_solve(p):
    """Solve the singular transport equation by the integrating-factor reduction.

    With ``F/V = -ell/z + G`` and ``E = exp(-int_0^z G)``, write
    ``f = fh E``; then ``(z d_z - ell) fh = r`` with ``r = (z g / V) / E``.
    The coefficient ``r_ell`` is the solvability defect; the particular
    solution takes ``fh_ell = 0`` and is returned even when the defect is
    nonzero.
    """
    V, F, g, ell = p.V, p.F, p.g, int(p.ell)
    n = V.cap
    vscale = max(V.max_abs(), 1e-300)
    if abs(V[0]) > STRUCTURAL_ZERO * vscale:
        raise NoHomogeneousIndex(f"V(0) = {V[0]:.3e} does not vanish")
    v1 = V[1]
    if abs(v1) <= STRUCTURAL_ZERO * vscale:
        raise NoHomogeneousIndex("V'(0) vanishes; the transport equation is degenerate")
    ratio = F[0] / v1
    if ell < 0 or abs(ratio + ell) > INDEX_TOL:
        raise NoHomogeneousIndex(
            f"F(0)/V'(0) = {ratio:.6g} is not -ell for ell = {ell}")
    z = TruncatedSeries1.variable(n)
    Vz = divide_exact(V, z)
    num = F + Vz * ell
    thr = max(INDEX_TOL * max(abs(F[0]), ell * abs(v1)), num.zero_threshold())
    G = divide_exact(num, V, num_threshold=thr)
    E = exp_series(-antiderive(G))
    inv_E = exp_series(antiderive(G))
    r = (g / Vz) * inv_E
    k = np.arange(n + 1)
    fh = np.zeros(n + 1, dtype=complex)
    mask = k != ell
    fh[mask] = r.coeffs[mask] / (k[mask] - ell)
    defect = r[ell] if ell <= n else 0j
    particular = TruncatedSeries1(fh, n) * E
    homogeneous = E.shift(ell) * (1.0 / math.factorial(ell))
    K = inv_E / Vz
    c = tuple(math.comb(ell, j) * math.factorial(j) * K[j] for j in range(ell + 1))
    return TransportSolution(homogeneous=homogeneous, solvability_defect=complex(defect),
                             particular=particular, G=G, weight=E, c=c)


# ---------------------------------------------------------------------------
# coordinate helpers
# ---------------------------------------------------------------------------

def _to_u(a, w):
    return recenter_w(a, w)


def _from_u(a, w):
    return recenter_w(a, -w)


def _u_series(n):
    return TruncatedSeries2.variable(1, n)


def _dzdw_u(a, dw):
    """``d_z d_w`` (original coordinates) of a series stored in ``(z, u)``."""
    au = derive(a, 1)
    return derive(au, 0) - dw * derive(au, 1)


def _on_char(a):
    """Restriction to ``{w = w(z)}``, i.e. ``u = 0``."""
    return a.restrict(1, 0.0)


def _drop_char(a, exact_degree, name):
    """Zero the ``u^0`` column of ``a``, which must vanish through ``exact_degree``."""
    col = a.coeffs[: exact_degree + 1, 0]
    scale = max(a.max_abs(), 1e-300)
    if col.size and np.max(np.abs(col)) > 1e-10 * scale:
        raise InvariantViolation(f"{name} vanishes on w = w(z)", float(np.max(np.abs(col))) / scale,
                                 1e-10, module="wkb")
    c = a.coeffs.copy()
    c[:, 0] = 0
    return TruncatedSeries2(c, a.cap)


def _lift(s):
    return TruncatedSeries2.from_univariate(s, 0)


# ---------------------------------------------------------------------------
# expansion state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WkbExpansion:
    """Formal quasimode data; ``mu_all`` may run one order past ``J_max``.

    ``amplitudes_u[j]`` is ``a~_j = a^_j + A_j J`` in ``(z, u)`` coordinates,
    ``a_hat_u[j]`` the part vanishing on ``u = 0`` (``a_hat_u[0]`` is zero).
    """

    ell: int
    J_max: int
    cap: int
    field: object
    gauge: object
    phase: object
    J_u: TruncatedSeries2
    V_hat: TruncatedSeries2
    V_eff: TruncatedSeries1
    F_eff_base: TruncatedSeries1
    mu_all: tuple
    A_hat0: TruncatedSeries1
    A_all: tuple
    a_hat_u: tuple
    amplitudes_u: tuple
    c0: complex = 0j
    c_coeffs: tuple = ()
    char_defects: tuple = ()
    norm_shifts: tuple = ()  # A_n^(ell)(0) / ell! for n >= 1 (zero unless overridden)
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    # -- views in (z, w) --------------------------------------------------

    @property
    def w_of_z(self):
        return self.phase.w_of_z

    @property
    def mu(self):
        return self.mu_all[: self.J_max + 1]

    @property
    def mu_next(self):
        return self.mu_all[self.J_max + 1] if len(self.mu_all) > self.J_max + 1 else None

    @property
    def A_list(self):
        return self.A_all[1: self.J_max + 1]

    def _zw(self, key, series):
        if key not in self._cache:
            self._cache[key] = _from_u(series, self.phase.w_of_z)
        return self._cache[key]

    @property
    def J_kernel(self):
        return self._zw("J", self.J_u)

    @property
    def a_hat_list(self):
        return [self._zw(("ahat", j), self.a_hat_u[j]) for j in range(1, self.J_max + 1)]

    @property
    def amplitudes(self):
        """``a~_0 .. a~_J`` in ``(z, w)``."""
        return [self._zw(("a", j), self.amplitudes_u[j]) for j in range(self.J_max + 1)]

    def amplitudes_real(self):
        """Amplitudes ``a_j(x1, x2)`` as (complex) series in real coordinates."""
        if "real" not in self._cache:
            self._cache["real"] = [realify(a) for a in self.amplitudes]
        return self._cache["real"]

    def mu_imag_bound(self):
        return max(abs(m.imag) / (1 + abs(m)) for m in self.mu_all)

    def reliable_degree(self, order):
        return reliable_degree(self.cap, order, self.ell)


def reliable_degree(cap, order, ell=0):
    """Highest total degree trusted in the residual at ``h^order``.

    The amplitude ``a~_n`` is exact through degree ``cap - 2n - 2`` (each
    induction level spends a ``d_z`` and a ``d_w``), so the defect at
    ``h^m`` is exact through ``cap - 2m``.  Measured by comparing caps
    ``N`` and ``N + 10``; ``ell`` does not enter.
    """
    return cap - 2 * order


# ---------------------------------------------------------------------------
# kernel J and the effective z-transport
# ---------------------------------------------------------------------------

def _kernel_u(phase, gauge, field):
    w = phase.w_of_z
    n = field.cap
    u = _u_series(n)
    v_u = _drop_char(_to_u(phase.v_tilde, w), n - 1, "v~")
    db_u = _drop_char(_to_u(gauge.B_tilde - field.b0, w), n, "B~ - b0")
    integrand = divide_exact(db_u, v_u, var=1)
    J_u = exp_series(-antiderive(integrand, 1))
    V_hat = divide_exact(v_u, u, var=1)
    return J_u, V_hat


def build_J(phase, field, gauge=None):
    """``J(z, w) = exp(-int_{w(z)}^w (B~ - b0)/v~ dw')`` with ``J(z, w(z)) = 1``."""
    if gauge is None:
        gauge = build_gauge(field)
    J_u, _ = _kernel_u(phase, gauge, field)
    return _from_u(J_u, phase.w_of_z)


def effective_coeffs(J, phase, field=None):
    """``V_eff = 4 d_w J|``, ``F_eff_base = 4 d_z d_w J|`` on ``{w = w(z)}``."""
    w = phase.w_of_z
    dJ = derive(J, 1)
    V_eff = substitute_w(dJ, w) * 4.0
    F_base = substitute_w(derive(dJ, 0), w) * 4.0
    if field is not None:
        want = -2.0 * math.sqrt(field.alpha * field.gamma) / field.b0
        scale = max(abs(want), 1.0)
        if abs(V_eff[0]) > 1e-9 * scale:
            raise InvariantViolation("V_eff(0) = 0", abs(V_eff[0]), 1e-9, module="wkb")
        if abs(V_eff[1] - want) > 1e-9 * scale:
            raise InvariantViolation("V_eff'(0) = -2 sqrt(alpha gamma)/b0",
                                     abs(V_eff[1] - want), 1e-9, module="wkb")
    return V_eff, F_base


def solve_order_zero(V_eff, F_eff_base, ell):
    """Fix ``mu_1`` by the index condition and return ``(mu1, A_hat0, solution)``."""
    mu1 = -ell * V_eff[1] - F_eff_base[0]
    sol = transport_solve(TransportProblem(V=V_eff, F=F_eff_base + mu1,
                                           g=TruncatedSeries1.zero(V_eff.cap), ell=ell))
    return complex(mu1), sol.weight, sol


def mu1_formula(field, ell):
    sa, sg = math.sqrt(field.alpha), math.sqrt(field.gamma)
    return 2 * ell * sa * sg / field.b0 + (sa + sg) ** 2 / (2 * field.b0)


def _solve_hat(R_u, J_u, V_hat):
    """Particular solution of ``u (V d_u + beta) a = R`` vanishing on ``u = 0``."""
    n = R_u.cap
    c = R_u.coeffs.copy()
    c[:, 0] = 0  # zero through the exact degrees (checked by the caller); drop truncation noise
    q = divide_exact(TruncatedSeries2(c, n), _u_series(n), var=1)
    return J_u * antiderive(q / (V_hat * J_u), 1)


def _char_defect(R_u, n):
    """Relative size of ``R_n(z, 0)`` on the degrees that are exact at level ``n``."""
    deg = R_u.cap - 2 * n - 4
    r0 = _on_char(R_u).truncated(deg)
    return r0.max_abs() / max(R_u.truncated(deg).max_abs(), 1e-300)


def _initial_state(field, gauge, phase, ell, J_max):
    n = field.cap
    J_u, V_hat = _kernel_u(phase, gauge, field)
    J = _from_u(J_u, phase.w_of_z)
    V_eff, F_base = effective_coeffs(J, phase, field)
    mu1, A_hat0, sol = solve_order_zero(V_eff, F_base, ell)
    A0 = A_hat0.shift(ell)
    a0 = _lift(A0) * J_u
    dw = _lift(derive(phase.w_of_z, 0))
    R0 = _dzdw_u(a0, dw) * 4.0 + a0 * mu1
    defect0 = _char_defect(R0, 0)
    if defect0 > 1e-10:
        raise InvariantViolation("(mu1 + 4 d_z d_w) a0 = 0 on w = w(z)", defect0, 1e-10,
                                 module="wkb")
    a_hat1 = _solve_hat(R0, J_u, V_hat)
    state = WkbExpansion(
        ell=ell, J_max=J_max, cap=n, field=field, gauge=gauge, phase=phase,
        J_u=J_u, V_hat=V_hat, V_eff=V_eff, F_eff_base=F_base,
        mu_all=(complex(field.b0), mu1), A_hat0=A_hat0, A_all=(A0,),
        a_hat_u=(TruncatedSeries2.zero(n), a_hat1), amplitudes_u=(a0,),
        c0=sol.c[0], c_coeffs=sol.c, char_defects=(defect0,))
    return state, J


def induction_step(state, n, normalization_shift=0.0):
    """Determine ``mu_{n+1}``, ``A_n`` and ``a^_{n+1}`` from orders ``<= n``.

    ``normalization_shift`` adds that multiple of the homogeneous solution
    ``z^ell A^_0`` to ``A_n`` (alters the amplitude normalization only).
    """
    if len(state.mu_all) != n + 1 or len(state.A_all) != n:
        raise ValueError(f"state is not ready for induction step {n}")
    ell = state.ell
    mu = state.mu_all
    J_u = state.J_u
    dw = _lift(derive(state.phase.w_of_z, 0))
    a_hat_n = state.a_hat_u[n]
    amps = state.amplitudes_u
    # known part of the right-hand side, without mu_{n+1} a0 and the A_n J terms
    known = _dzdw_u(a_hat_n, dw) * 4.0 + a_hat_n * mu[1]
    for j in range(2, n + 1):
        known = known + amps[n + 1 - j] * mu[j]
    g_known = -_on_char(known)
    g_mu = _on_char(amps[0])
    F_eff = state.F_eff_base + mu[1]
    sol_k = transport_solve(TransportProblem(state.V_eff, F_eff, g_known, ell))
    sol_m = transport_solve(TransportProblem(state.V_eff, F_eff, g_mu, ell))
    d_mu = sol_m.solvability_defect
    if abs(d_mu) <= 1e-12 * max(1.0, abs(state.c0)):
        raise SolvabilityCoefficientVanished(
            f"coefficient of mu_{n + 1} in the solvability condition is {d_mu:.3e}")
    mu_next = sol_k.solvability_defect / d_mu
    A_n = sol_k.particular - sol_m.particular * mu_next
    hom = state.A_hat0.shift(ell)
    A_n = A_n - hom * (A_n[ell] - normalization_shift)
    a_n = a_hat_n + _lift(A_n) * J_u
    R = _dzdw_u(a_n, dw) * 4.0 + a_n * mu[1] + amps[0] * mu_next
    for j in range(2, n + 1):
        R = R + amps[n + 1 - j] * mu[j]
    defect = _char_defect(R, n)
    if defect > 1e-10:
        raise InvariantViolation(f"solvability of order {n + 2} after fixing mu_{n + 1}",
                                 defect, 1e-10, module="wkb")
    a_hat_next = _solve_hat(R, J_u, state.V_hat)
    return replace(state, mu_all=mu + (complex(mu_next),), A_all=state.A_all + (A_n,),
                   a_hat_u=state.a_hat_u + (a_hat_next,), amplitudes_u=amps + (a_n,),
                   char_defects=state.char_defects + (defect,),
                   norm_shifts=state.norm_shifts + (complex(normalization_shift),), _cache={})


def min_cap(J_max, ell):
    return 2 * (J_max + ell + 2)


def expand(field, phase=None, ell=0, J_max=2, cap=None, gauge=None, normalization_shifts=None,
           check=True):
    """Run the full construction through order ``J_max``.

    ``cap`` must equal the field's cap when given (the field carries it).
    """
    if cap is not None and cap != field.cap:
        raise ValueError(f"cap {cap} differs from the field's cap {field.cap}")
    if field.cap < min_cap(J_max, ell):
        raise ValueError(
            f"degree cap {field.cap} is below the minimum {min_cap(J_max, ell)} "
            f"for J_max={J_max}, ell={ell}")
    if gauge is None:
        gauge = build_gauge(field)
    if phase is None:
        phase = build_phase(field, gauge)
    state, _ = _initial_state(field, gauge, phase, int(ell), int(J_max))
    shifts = normalization_shifts or {}
    for n in range(1, J_max + 1):
        state = induction_step(state, n, normalization_shift=shifts.get(n, 0.0))
    if check:
        check_expansion(state)
    return state


def check_expansion(exp):
    b0 = exp.field.b0

    def fail(name, value, tol):
        raise InvariantViolation(name, value, tol, module="wkb")

    if abs(exp.mu_all[0] - b0) > 1e-11 * b0:
        fail("mu0 = b0", abs(exp.mu_all[0] - b0), 1e-11)
    want = mu1_formula(exp.field, exp.ell)
    if abs(exp.mu_all[1] - want) > 1e-9 * abs(want):
        fail("mu1 closed form", abs(exp.mu_all[1] - want) / abs(want), 1e-9)
    for j, m in enumerate(exp.mu_all):
        if abs(m.imag) > 1e-9 * (1 + abs(m)):
            fail(f"mu_{j} real", abs(m.imag), 1e-9)
    w = exp.w_of_z
    J = exp.J_kernel
    r = (substitute_w(J, w) - 1.0).max_abs()
    if r > 1e-11 * max(1.0, J.max_abs()):
        fail("J(z, w(z)) = 1", r, 1e-11)
    for j, ah in enumerate(exp.a_hat_u[1: exp.J_max + 1], start=1):
        r = _on_char(ah).max_abs() / max(ah.max_abs(), 1e-300)
        if r > 1e-11:
            fail(f"a^_{j} vanishes on w = w(z)", r, 1e-11)
    for j, A in enumerate(exp.A_all[1:], start=1):
        if abs(A[exp.ell] - exp.norm_shifts[j - 1]) > 1e-12 * max(A.max_abs(), 1.0):
            fail(f"A_{j}^(ell)(0) = 0", abs(A[exp.ell]), 1e-12)


def run(coeffs, cap, ell=0, J_max=2):
    """Convenience: field coefficients -> normalized field -> full expansion."""
    from .field import field_from_coeffs
    return expand(field_from_coeffs(coeffs, cap), ell=ell, J_max=J_max)


# ---------------------------------------------------------------------------
# residual certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexResidual:
    J: int
    degree: tuple  # reliable degree used at each order 1..J+1
    absolute: tuple  # max |coefficient| of the defect at orders h^1 .. h^{J+1}
    relative: tuple  # the same divided by the largest contributing coefficient
    defects: tuple  # defect series D_1 .. D_{2J+1} in (z, w)

    def order(self, m):
        return self.defects[m - 1]


def complex_residual(exp, J=None, mu=None):
    """Apply ``h v~ d_w + h (B~ - mu0) - 4 h^2 d_z d_w - h sum_{j>=1} mu_j h^j``
    to ``sum_{j<=J} h^j a~_j`` and collect powers of ``h``.

    Orders ``1 .. J+1`` must cancel; later ones are the genuine remainder.
    ``mu`` overrides the ladder (tamper checks).
    """
    J = exp.J_max if J is None else J
    mus = list(exp.mu_all[: J + 1] if mu is None else mu)
    amps = exp.amplitudes[: J + 1]
    v = exp.phase.v_tilde
    dB = exp.gauge.B_tilde - mus[0]
    Lv = [v * derive(a, 1) for a in amps]
    LB = [dB * a for a in amps]
    DD = [derive(derive(a, 1), 0) * 4.0 for a in amps]
    defects, absolute, relative, degrees = [], [], [], []
    for m in range(1, 2 * J + 2):
        terms = []
        if m - 1 <= J:
            terms += [Lv[m - 1], LB[m - 1]]
        if 0 <= m - 2 <= J:
            terms.append(-DD[m - 2])
        for j in range(1, J + 1):
            k = m - 1 - j
            if 0 <= k <= J:
                terms.append(-amps[k] * mus[j])
        total = terms[0]
        for t in terms[1:]:
            total = total + t
        defects.append(total)
        if m <= J + 1:
            deg = exp.reliable_degree(m)
            absolute.append(total.truncated(deg).max_abs())
            ref = max(max(t.truncated(deg).max_abs() for t in terms), 1e-300)
            relative.append(absolute[-1] / ref)
            degrees.append(deg)
    return ComplexResidual(J=J, degree=tuple(degrees), absolute=tuple(absolute),
                           relative=tuple(relative), defects=tuple(defects))


# ---------------------------------------------------------------------------
# real-space evaluation
# ---------------------------------------------------------------------------

def _horner_real(s, x1, x2):
    return eval_complex(s, (x1, x2))


def validity_radius(exp, r_max=2.0, samples=(96, 64)):
    """Empirical radius of the disc on which the construction is trusted.

    The smaller of (a) the largest radius on which the Hessian of ``Re S``
    stays positive definite and (b) 0.9 times a root-test estimate of the
    convergence radius of ``a_0`` from its homogeneous parts.
    """
    key = ("validity", r_max)
    if key in exp._cache:
        return exp._cache[key]
    Sr = TruncatedSeries2(exp.phase.S_real.coeffs.real, exp.cap)
    h11 = derive(derive(Sr, 0), 0)
    h22 = derive(derive(Sr, 1), 1)
    h12 = derive(derive(Sr, 0), 1)
    nr, nt = samples
    radii = np.linspace(0, r_max, nr + 1)[1:]
    theta = np.linspace(0, 2 * np.pi, nt, endpoint=False)
    R, T = np.meshgrid(radii, theta, indexing="ij")
    X, Y = R * np.cos(T), R * np.sin(T)
    a = np.real(_horner_real(h11, X, Y))
    c = np.real(_horner_real(h22, X, Y))
    b = np.real(_horner_real(h12, X, Y))
    ok = (a > 0) & (a * c - b * b > 0)
    bad = np.nonzero(~ok.all(axis=1))[0]
    r_convex = radii[bad[0] - 1] if bad.size and bad[0] > 0 else (0.0 if bad.size else r_max)
    a0 = exp.amplitudes_real()[0]
    deg_hi = exp.reliable_degree(1)
    est = []
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    ct, st = np.cos(th), np.sin(th)
    parts = a0.parts()
    for d in range(max(2, deg_hi // 2), deg_hi + 1):
        vals = sum(p * ct ** i * st ** (d - i) for i, p in enumerate(parts[d]))
        m = np.max(np.abs(vals))
        if m > 0:
            est.append(m ** (1.0 / d))
    r_conv = 1.0 / max(est) if est and max(est) > 0 else r_max
    radius = float(min(r_convex, 0.9 * r_conv, r_max))
    exp._cache[key] = radius
    return radius


@dataclass(frozen=True)
class RealSamples:
    u: np.ndarray  # e^{-S/h} sum h^j a_j
    residual: np.ndarray  # e^{S/h} (L_h - h sum mu_j h^j) u_h
    max_residual: float
    h_coeffs: tuple  # residual = sum_m h^m h_coeffs[m]


def residual_series(exp, J=None, mu=None):
    """Real-coordinate series ``D_m`` with ``e^{S/h}(L_h - h sum mu_j h^j) u_h = sum_m h^m D_m``.

    ``L_h = (-ih grad - A)^2``.  Conjugation gives, with ``c = -A + i grad S``,
    ``e^{S/h} L_h e^{-S/h} a = (c.c) a + h [(i div A + lap S) a + 2 (grad S + iA).grad a]
    - h^2 lap a``.  Each ``D_m`` is cut at its exact degree ``cap - 2m`` (the
    coefficients above it are truncation artefacts, not part of the analytic
    residual).
    """
    J = exp.J_max if J is None else J
    mus = list(exp.mu_all[: J + 1] if mu is None else mu)
    key = ("Dseries", J, tuple(mus))
    if key in exp._cache:
        return exp._cache[key]
    n = exp.cap
    S = exp.phase.S_real
    A1, A2 = exp.gauge.A1, exp.gauge.A2
    S1, S2 = derive(S, 0), derive(S, 1)
    lapS = derive(S1, 0) + derive(S2, 1)
    divA = derive(A1, 0) + derive(A2, 1)
    c1, c2 = S1 * 1j - A1, S2 * 1j - A2
    cc = c1 * c1 + c2 * c2
    g1, g2 = S1 + A1 * 1j, S2 + A2 * 1j
    zeroth = divA * 1j + lapS
    D = [TruncatedSeries2.zero(n) for _ in range(2 * J + 3)]
    for k, a in enumerate(exp.amplitudes_real()[: J + 1]):
        a1, a2 = derive(a, 0), derive(a, 1)
        D[k] = D[k] + cc * a
        D[k + 1] = D[k + 1] + zeroth * a + (g1 * a1 + g2 * a2) * 2.0
        D[k + 2] = D[k + 2] - (derive(a1, 0) + derive(a2, 1))
        for j, m in enumerate(mus):
            D[k + j + 1] = D[k + j + 1] - a * m
    D = tuple(d.truncated(max(n - 2 * max(m, 1), 0)) for m, d in enumerate(D))
    exp._cache[key] = D
    return D


def residual_h_coeffs(exp, X, Y, J=None, mu=None):
    """Coefficient arrays ``D_m(x)`` with ``residual(h, x) = sum_m h^m D_m(x)``."""
    return [_horner_real(d, X, Y) for d in residual_series(exp, J=J, mu=mu)]


def _amplitudes_exact(exp, J):
    n = exp.cap
    return [a.truncated(n - 2 * k - 2) for k, a in enumerate(exp.amplitudes_real()[: J + 1])]


def real_eval(exp, h, grid, J=None, mu=None, check_window=True):
    """Sample ``u_h`` and the conjugated residual on a rectangular grid.

    ``grid`` is ``(x1_min, x1_max, x2_min, x2_max, spacing)`` or a pair of
    coordinate arrays ``(X, Y)``.
    """
    from .errors import GridOutsideValidityWindow
    if len(grid) == 5:
        x0, x1, y0, y1, step = grid
        xs = np.arange(x0, x1 + 0.5 * step, step)
        ys = np.arange(y0, y1 + 0.5 * step, step)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
    else:
        X, Y = grid
    if check_window:
        radius = validity_radius(exp)
        reach = float(np.max(np.hypot(X, Y)))
        if reach > radius:
            raise GridOutsideValidityWindow(
                f"grid reaches |x| = {reach:.3g} beyond the validity radius {radius:.3g}")
    J = exp.J_max if J is None else J
    D = residual_h_coeffs(exp, X, Y, J=J, mu=mu)
    res = sum(h ** m * Dm for m, Dm in enumerate(D))
    u = ansatz_samples(exp, h, X, Y, J=J)
    return RealSamples(u=u, residual=res, max_residual=float(np.max(np.abs(res))),
                       h_coeffs=tuple(D))


def ansatz_samples(exp, h, X, Y, J=None):
    """``e^{-S/h} sum_{j<=J} h^j a_j`` on arbitrary points (no window check)."""
    J = exp.J_max if J is None else J
    S = _horner_real(exp.phase.S_real, X, Y)
    amp = sum(h ** k * _horner_real(a, X, Y) for k, a in enumerate(_amplitudes_exact(exp, J)))
    return np.exp(-S / h) * amp


def residual_slope(exp, hs, grid, J=None, mu=None):
    """Least-squares slope of ``log max|residual|`` against ``log h``, with R^2."""
    vals = np.array([real_eval(exp, h, grid, J=J, mu=mu).max_residual for h in hs])
    x, y = np.log(hs), np.log(vals)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), res, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ np.array([slope, icpt])
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(len(hs) - 2, 1)
    se = math.sqrt(ss_res / dof / max(float(np.sum((x - x.mean()) ** 2)), 1e-300))
    return dict(slope=float(slope), intercept=float(icpt), r2=r2, slope_stderr=se,
                h=list(map(float, hs)), max_residual=vals.tolist())


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _cplx(x):
    return [float(np.real(x)), float(np.imag(x))]


def _table2(series, prefix=(), threshold=0.0):
    c = series.coeffs
    out = []
    for i, k in zip(*np.nonzero(np.abs(c) > threshold)):
        out.append(list(prefix) + [int(i), int(k)] + _cplx(c[i, k]))
    return out


def expansion_to_dict(exp):
    """Plain-data view: mu ladder, amplitude tables ``[j, i, k, re, im]``, phase data."""
    ph = exp.phase
    q = ph.S_real.coeffs.real
    amps = []
    for j, a in enumerate(exp.amplitudes):
        amps += _table2(a, (j,))
    return {
        "ell": exp.ell,
        "J_max": exp.J_max,
        "cap": exp.cap,
        "mu": [_cplx(m) for m in exp.mu],
        "mu_next": _cplx(exp.mu_next) if exp.mu_next is not None else None,
        "mu_imag_bound": float(exp.mu_imag_bound()),
        "mu1_formula": mu1_formula(exp.field, exp.ell),
        "c0": _cplx(exp.c0),
        "c0_formula": -exp.field.b0 / math.sqrt(4 * exp.field.alpha * exp.field.gamma),
        "field": {"b0": exp.field.b0, "alpha": exp.field.alpha, "gamma": exp.field.gamma,
                  "rotation_angle": exp.field.rotation_angle,
                  "coeffs": [[i, k, re] for i, k, re, _ in _table2(exp.field.B_series)]},
        "phase": {
            "w_of_z": [_cplx(x) for x in ph.w_of_z.coeffs],
            "f": [_cplx(x) for x in ph.f.coeffs],
            "S": _table2(ph.S_real),
            "ReS_quadratic": {"x1^2": float(q[2, 0]), "x1x2": float(q[1, 1]),
                              "x2^2": float(q[0, 2])},
        },
        "amplitudes": amps,
        "amplitude_exact_degree": [exp.cap - 2 * j - 2 for j in range(exp.J_max + 1)],
        "A_hat0": [_cplx(x) for x in exp.A_hat0.coeffs],
        "validity_radius": validity_radius(exp),
        "solvability_defects": [float(d) for d in exp.char_defects],
    }


def tamper_crossover(exp, grid, mu_index=1, delta=1e-3, J=None):
    """``h`` below which a shift ``delta`` of ``mu_index`` outweighs the true remainder.

    The shift adds ``-delta h^{mu_index+1} a_0`` to the residual, the remainder
    starts at ``h^{J+2} D_{J+2}``; both are measured by grid max-norms.
    """
    J = exp.J_max if J is None else J
    x0, x1, y0, y1, step = grid
    X, Y = np.meshgrid(np.arange(x0, x1 + 0.5 * step, step),
                       np.arange(y0, y1 + 0.5 * step, step), indexing="ij")
    D = residual_series(exp, J=J)
    rem = float(np.max(np.abs(_horner_real(D[J + 2], X, Y))))
    a0 = float(np.max(np.abs(_horner_real(_amplitudes_exact(exp, 0)[0], X, Y))))
    p = mu_index + 1
    if rem == 0:
        return 1.0
    return float((delta * a0 / rem) ** (1.0 / (J + 2 - p)))

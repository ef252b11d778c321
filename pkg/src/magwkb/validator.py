"""Independent numerical check against the discretized magnetic Laplacian.

The operator ``(-ih grad - A)^2`` on ``[-L, L]^2`` with Dirichlet data is
discretized by the link-variable (Peierls) five-point scheme on the
``(M - 2)^2`` interior nodes of an ``M x M`` grid.  Index ``a`` runs along
``x1`` and ``b`` along ``x2``; flat vectors use C order over ``(a, b)``.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import EigenNoConvergence, ValidatorError
from .field import build_gauge
from .series import eval_complex

DENSE_MAX = 48
RESIDUAL_TOL = 1e-8
DEFAULT_SWEEP = (0.1, 0.07, 0.05, 0.035, 0.025)


def _potential_from_gauge(gauge):
    def A(X, Y):
        return (np.real(eval_complex(gauge.A1, (X, Y))), np.real(eval_complex(gauge.A2, (X, Y))))
    return A


@dataclass
class DiscreteOperator:
    h: float
    L: float
    M: int
    ux: np.ndarray  # link (a, b) -> (a+1, b) on interior nodes
    uy: np.ndarray  # link (a, b) -> (a, b+1)
    field: object = None
    _matrix: object = dc_field(default=None, repr=False)

    @property
    def spacing(self):
        return 2.0 * self.L / (self.M - 1)

    @property
    def scale(self):
        return self.h ** 2 / self.spacing ** 2

    @property
    def n_side(self):
        return self.M - 2

    @property
    def shape(self):
        n = self.n_side ** 2
        return (n, n)

    @property
    def link_phases(self):
        return self.ux, self.uy

    def coords(self):
        x = -self.L + self.spacing * np.arange(1, self.M - 1)
        return np.meshgrid(x, x, indexing="ij")

    def apply(self, psi):
        """Matrix-free action on a flat vector or an ``(M-2, M-2)`` array."""
        flat = np.ndim(psi) == 1
        n = self.n_side
        grid = np.ascontiguousarray(np.reshape(psi, (n, n)), dtype=np.complex128)
        out = kernels.peierls_apply(grid, self.ux, self.uy, self.scale)
        return np.asarray(out).ravel() if flat else np.asarray(out)

    def matvec(self, x):
        return self.apply(x)

    def matrix(self):
        """Sparse CSR form (assembled once)."""
        if self._matrix is None:
            n = self.n_side
            idx = np.arange(n * n).reshape(n, n)
            c = self.scale
            rows = [idx.ravel()]
            cols = [idx.ravel()]
            vals = [np.full(n * n, 4.0 * c, dtype=complex)]
            for src, dst, u in ((idx[:-1, :], idx[1:, :], self.ux[:-1, :]),
                                (idx[:, :-1], idx[:, 1:], self.uy[:, :-1])):
                rows += [src.ravel(), dst.ravel()]
                cols += [dst.ravel(), src.ravel()]
                vals += [-c * u.ravel(), -c * np.conj(u).ravel()]
            self._matrix = sp.csc_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=self.shape)
        return self._matrix

    def rayleigh(self, x):
        x = np.ravel(x)
        return float(np.real(np.vdot(x, self.apply(x))) / np.real(np.vdot(x, x)))


def build_discrete_operator(field, h, L=1.0, M=512, potential=None, gauge=None):
    """Peierls discretization with midpoint-rule line integrals of ``A``.

    ``potential(X, Y) -> (A1, A2)`` overrides the field's divergence-free gauge.
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    if M < 4:
        raise ValueError("need M >= 4 grid points per side")
    if potential is None:
        potential = _potential_from_gauge(gauge if gauge is not None else build_gauge(field))
    s = 2.0 * L / (M - 1)
    x = -L + s * np.arange(1, M - 1)
    X, Y = np.meshgrid(x, x, indexing="ij")
    A1, _ = potential(X + 0.5 * s, Y)
    _, A2 = potential(X, Y + 0.5 * s)
    ux = np.ascontiguousarray(np.exp(-1j * s * np.asarray(A1) / h))
    uy = np.ascontiguousarray(np.exp(-1j * s * np.asarray(A2) / h))
    return DiscreteOperator(h=float(h), L=float(L), M=int(M), ux=ux, uy=uy, field=field)


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Eigenpairs:
    values: np.ndarray
    vectors: np.ndarray  # columns, unit norm
    residuals: np.ndarray
    method: str
    iterations: int = 0


def _residuals(op, vals, vecs):
    H = op.matrix()
    R = H @ vecs - vecs * vals
    return np.linalg.norm(R, axis=0) / np.linalg.norm(vecs, axis=0)


def _rayleigh_ritz(H, Q, k):
    Q, _ = np.linalg.qr(Q)
    T = Q.conj().T @ (H @ Q)
    T = 0.5 * (T + T.conj().T)
    w, Z = scipy.linalg.eigh(T)
    return w[:k], Q @ Z[:, :k]


def _block_inverse(H, lu, k, rng, tol, guard=6, max_iter=60):
    """Guarded block inverse iteration; the shift moves to just below the lowest Ritz
    value once the block has found the cluster."""
    n = H.shape[0]
    p = min(n, k + guard)
    X = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
    I = sp.identity(n, format="csc")
    for it in range(max_iter):
        X = lu.solve(X)
        vals, X = _rayleigh_ritz(H, X, p)
        R = H @ X[:, :k] - X[:, :k] * vals[:k]
        if np.linalg.norm(R, axis=0).max() <= tol:
            break
        if it in (4, 14):
            lu = spla.splu(sp.csc_matrix(H - vals[0] * (1 - 1e-4 if it == 4 else 1 - 1e-6) * I))
    return vals[:k], X[:, :k], lu


def lowest_eigenpairs(op, k=1, seed=0, tol=RESIDUAL_TOL, sigma=None, max_refine=6,
                      dense_max=DENSE_MAX):
    """The ``k`` smallest eigenpairs, each with ``||Hx - lx|| <= tol ||x||``.

    ``M <= dense_max`` uses a dense Hermitian eigensolver.  Otherwise a
    shift-invert Lanczos run (ARPACK, sparse LU of ``H - sigma``) below the
    bottom of the spectrum is followed by block inverse-iteration sweeps
    with Rayleigh-Ritz until all residuals pass.
    """
    if not 1 <= k <= 20:
        raise ValueError("k must lie in 1..20")
    H = op.matrix()
    n = H.shape[0]
    if op.M <= dense_max or n <= 4 * k + 8:
        vals, vecs = scipy.linalg.eigh(H.toarray(), subset_by_index=[0, k - 1], driver="evr")
        res = _residuals(op, vals, vecs)
        method, its = "dense", 0
    else:
        if sigma is None:
            b0 = op.field.b0 if op.field is not None else 0.0
            sigma = 0.95 * b0 * op.h
        lu = spla.splu(sp.csc_matrix(H - sigma * sp.identity(n, format="csc")))
        OPinv = spla.LinearOperator(H.shape, matvec=lu.solve, dtype=complex)
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ncv = min(n - 1, max(4 * k + 8, 24))
        method = "shift-invert"
        try:
            w, V = spla.eigsh(H, k=k, sigma=sigma, which="LM", OPinv=OPinv, v0=v0,
                              ncv=ncv, tol=0, maxiter=50)
        except spla.ArpackNoConvergence:
            # single-vector Lanczos cannot resolve a (nearly) degenerate cluster, e.g.
            # Landau levels; a guarded block inverse iteration can
            w, V, lu = _block_inverse(H, lu, k, rng, tol)
            method = "block-inverse"
        order = np.argsort(w)
        vals, vecs = w[order], V[:, order]
        res = _residuals(op, vals, vecs)
        its = 0
        history = [float(res.max())]
        while res.max() > tol and its < max_refine:
            X = np.column_stack([lu.solve(vecs[:, j]) for j in range(k)])
            vals, vecs = _rayleigh_ritz(H, X, k)
            res = _residuals(op, vals, vecs)
            its += 1
            history.append(float(res.max()))
        if res.max() > tol:
            raise EigenNoConvergence(
                f"eigenpair residuals {res.max():.2e} above {tol:.0e} after {its} refinements",
                iterations=its, residuals=history)
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    # deterministic phase: largest-modulus entry real and positive
    piv = np.argmax(np.abs(vecs), axis=0)
    ph = vecs[piv, np.arange(vecs.shape[1])]
    vecs = vecs * (np.abs(ph) / ph)
    if res.max() > tol:
        raise EigenNoConvergence(f"dense eigensolver residual {res.max():.2e}", 0, list(res))
    return Eigenpairs(values=np.asarray(vals, dtype=float), vectors=vecs, residuals=res,
                      method=method, iterations=its)


# ---------------------------------------------------------------------------
# sweep, fits and overlaps
# ---------------------------------------------------------------------------

@dataclass
class SweepPoint:
    h: float
    M: int
    M_ref: int
    eigenvalues: np.ndarray
    eigenvalues_ref: np.ndarray
    residuals: np.ndarray
    overlap: float = None
    method: str = ""

    @property
    def extrapolated(self):
        """Richardson extrapolation in the grid spacing (five-point error is ``O(s^2)``)."""
        s2 = (1.0 / (self.M - 1)) ** 2
        r2 = (1.0 / (self.M_ref - 1)) ** 2
        return self.eigenvalues + (self.eigenvalues - self.eigenvalues_ref) * s2 / (r2 - s2)

    @property
    def refinement_delta(self):
        """Relative change of each eigenvalue between ``M_ref`` and ``M``."""
        return np.abs(self.eigenvalues - self.eigenvalues_ref) / np.abs(self.eigenvalues)


def cutoff(r, radius):
    """Smooth radial cutoff: 1 on ``r <= radius/2``, 0 on ``r >= radius``."""
    t = np.clip((np.asarray(r) / radius - 0.5) * 2.0, 0.0, 1.0)
    inner = np.where(t < 1, np.exp(-1.0 / np.maximum(1 - t, 1e-300)), 0.0)
    outer = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    return np.where(t <= 0, 1.0, inner / (inner + outer))


def wkb_on_grid(expansion, h, op, J=None, radius=None):
    """Cutoff WKB Ansatz sampled on the interior nodes of ``op``."""
    from .wkb import ansatz_samples, validity_radius
    X, Y = op.coords()
    if radius is None:
        radius = min(validity_radius(expansion), op.L)
    R = np.hypot(X, Y)
    chi = cutoff(R, radius)
    inside = chi > 0
    vals = np.zeros(X.shape, dtype=complex)
    vals[inside] = ansatz_samples(expansion, h, X[inside], Y[inside], J=J) * chi[inside]
    return vals.ravel()


def overlap(eigvec, other):
    """``|<psi, phi>|`` after normalizing both vectors on the grid."""
    a = np.ravel(eigvec)
    b = np.ravel(other)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(min(1.0, abs(np.vdot(a, b)) / (na * nb)))


def wkb_overlap(eigvec, expansion, h, op, J=None):
    return overlap(eigvec, wkb_on_grid(expansion, h, op, J=J))


def _ref_size(M, refine):
    if refine == "double":
        return 2 * M - 1  # same nodes plus midpoints
    if refine == "half":
        return (M + 1) // 2
    raise ValueError(f"unknown refinement {refine!r}")


def run_sweep(field, hs=DEFAULT_SWEEP, L=1.0, M=512, k=2, refine="half", seed=0,
              expansion=None, overlap_J=2, gauge=None, log=None):
    """Eigenvalues over an ``h`` sweep, each checked against a second grid."""
    if gauge is None:
        gauge = build_gauge(field)
    points = []
    for h in hs:
        op = build_discrete_operator(field, h, L, M, gauge=gauge)
        ep = lowest_eigenpairs(op, k, seed=seed)
        M_ref = _ref_size(M, refine)
        op_ref = build_discrete_operator(field, h, L, M_ref, gauge=gauge)
        ep_ref = lowest_eigenpairs(op_ref, k, seed=seed)
        pt = SweepPoint(h=float(h), M=M, M_ref=M_ref, eigenvalues=ep.values,
                        eigenvalues_ref=ep_ref.values, residuals=ep.residuals,
                        method=ep.method)
        if expansion is not None:
            pt.overlap = wkb_overlap(ep.vectors[:, 0], expansion, h, op, J=overlap_J)
        if log is not None:
            log(f"h={h:g} M={M}: lambda={ep.values} delta={pt.refinement_delta}")
        points.append(pt)
    return points


def _poly_intercept(x, y, degree):
    coef = np.polyfit(x, y, degree)
    return float(coef[-1]), coef[::-1].tolist()


@dataclass
class SpectralReport:
    b0: float
    alpha: float
    gamma: float
    h: list
    M: int
    M_ref: int
    L: float
    eigenvalues: list  # per h, ascending, finest grid
    eigenvalues_used: list  # what the fits consume (Richardson-extrapolated by default)
    refinement_deltas: list
    residuals: list
    overlaps: list
    fit_degree: int
    fitted_mu1: list  # per level ell: intercept of (lambda_ell - b0 h)/h^2 as a polynomial in h
    predicted_mu1: list
    mu1_rel_error: list
    fit_coeffs: list  # the o(h^2) trend, ascending powers of h
    intercepts_by_degree: dict  # level -> {degree: intercept}, for transparency
    gap_coefficient: float
    gap_predicted: float
    gap_rel_error: float
    leading_ratio: float  # lambda_0(h_min) / (b0 h_min)
    extrapolated: bool = True
    wkb_ladder_error: list = None  # |lambda_0 - h sum_{j<=J} mu_j h^j| / h^2 per h

    @property
    def max_refinement_delta(self):
        return float(max(max(d) for d in self.refinement_deltas))

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            if isinstance(v, dict):
                v = {str(a): ({str(c): d for c, d in b.items()} if isinstance(b, dict) else b)
                     for a, b in v.items()}
            out[k] = v
        out["max_refinement_delta"] = self.max_refinement_delta
        return out


def compare_eigenvalues(points, field, expansion=None, fit_degree=None, extrapolate=True, L=None):
    """Fit the sweep against ``lambda_ell(h) = b0 h + mu1(ell) h^2 + o(h^2)``.

    ``(lambda_ell - b0 h)/h^2`` is fitted by a polynomial in ``h`` whose
    constant term estimates ``mu1(ell)``; the default degree is
    ``min(3, len(h) - 2)``, which leaves one residual degree of freedom.
    With ``extrapolate`` the grid pair of each point is Richardson-combined.
    """
    from .wkb import mu1_formula
    if len(points) < 4:
        raise ValidatorError("need at least 4 values of h")
    pts = sorted(points, key=lambda p: -p.h)
    hs = np.array([p.h for p in pts])
    if hs.max() / hs.min() < 4 - 1e-12:
        raise ValidatorError("h sweep must span a factor of at least 4")
    if fit_degree is None:
        fit_degree = min(3, len(hs) - 2)
    raw = np.array([p.eigenvalues for p in pts])
    lam = np.array([p.extrapolated for p in pts]) if extrapolate else raw
    b0 = field.b0
    nlev = lam.shape[1]
    fitted, predicted, rel, coeffs, by_deg = [], [], [], [], {}
    for ell in range(nlev):
        y = (lam[:, ell] - b0 * hs) / hs ** 2
        c0, cs = _poly_intercept(hs, y, fit_degree)
        want = mu1_formula(field, ell)
        fitted.append(c0)
        predicted.append(want)
        rel.append(abs(c0 - want) / abs(want))
        coeffs.append(cs)
        by_deg[ell] = {d: _poly_intercept(hs, y, d)[0] for d in range(1, len(hs) - 1)}
    gap_want = 2 * math.sqrt(field.alpha * field.gamma) / b0
    if nlev >= 2:
        gy = (lam[:, 1] - lam[:, 0]) / hs ** 2
        gap, _ = _poly_intercept(hs, gy, fit_degree)
        by_deg["gap"] = {d: _poly_intercept(hs, gy, d)[0] for d in range(1, len(hs) - 1)}
    else:
        gap = float("nan")
    ladder = None
    if expansion is not None:
        mus = np.real(np.array(expansion.mu))
        pred = np.array([h * sum(m * h ** j for j, m in enumerate(mus)) for h in hs])
        ladder = (np.abs(lam[:, 0] - pred) / hs ** 2).tolist()
    return SpectralReport(
        b0=b0, alpha=field.alpha, gamma=field.gamma, h=hs.tolist(), M=pts[0].M,
        M_ref=pts[0].M_ref, L=L, eigenvalues=raw.tolist(), eigenvalues_used=lam.tolist(),
        refinement_deltas=[p.refinement_delta.tolist() for p in pts],
        residuals=[np.asarray(p.residuals).tolist() for p in pts],
        overlaps=[p.overlap for p in pts], fit_degree=int(fit_degree), fitted_mu1=fitted,
        predicted_mu1=predicted, mu1_rel_error=rel, fit_coeffs=coeffs,
        intercepts_by_degree=by_deg, gap_coefficient=gap, gap_predicted=gap_want,
        gap_rel_error=abs(gap - gap_want) / gap_want,
        leading_ratio=float(raw[-1, 0] / (b0 * hs[-1])), extrapolated=bool(extrapolate),
        wkb_ladder_error=ladder)

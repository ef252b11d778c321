"""Acceptance criteria 1-8.

Each test records one ``PASS``/``FAIL`` line; the lines are printed in the
terminal summary (see ``conftest.py``) and by ``python tests/test_acceptance.py``.
"""

import math

import numpy as np
import pytest

from magwkb.cli import residual_report
from magwkb.field import field_from_coeffs
from magwkb.series import TruncatedSeries1 as S1, derive
from magwkb.validator import DEFAULT_SWEEP, compare_eigenvalues, run_sweep
from magwkb.wkb import (TransportProblem, complex_residual, expand, mu1_formula, run,
                        transport_solve)

from conftest import PERTURBED, RADIAL, SKEW, random_field

RESULTS = {}


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def randomized_fields(count=10, seed=2024):
    rng = np.random.default_rng(seed)
    return [random_field(rng) for _ in range(count)]


def test_criterion_1_mu1_formula():
    worst = 0.0
    for coeffs in randomized_fields():
        f = field_from_coeffs(coeffs, 12)
        for ell in (0, 1):
            e = expand(f, ell=ell, J_max=1)
            want = mu1_formula(f, ell)
            worst = max(worst, abs(e.mu[1] - want) / abs(want))
    record(1, worst <= 1e-8, f"max relative error of mu1 over 10 fields x ell in {{0,1}}: "
                             f"{worst:.2e} (<= 1e-8)")


def test_criterion_2_radial_oracle():
    worst = 0.0
    n = 20
    for b0, c in ((1.0, 1.0), (0.7, 2.3), (1.6, 0.4)):
        e = run({(0, 0): b0, (2, 0): c, (0, 2): c}, n, J_max=2)
        want = np.zeros((n + 1, n + 1), complex)
        for k in range(n // 2 + 1):
            want[k, k] = (-c / (2 * b0)) ** k
        errs = [e.w_of_z.max_abs(), e.phase.f.max_abs(),
                np.max(np.abs(e.amplitudes[0].coeffs - want)),
                np.max(np.abs(e.J_kernel.coeffs - want))]
        worst = max(worst, *errs)
    record(2, worst <= 1e-10, f"w = 0, f = 0, a0 = J = sum(-c z w/(2 b0))^k through cap {n}: "
                              f"max deviation {worst:.2e} (<= 1e-10)")


def test_criterion_3_symbolic_certificate():
    worst = 0.0
    for coeffs in (RADIAL, PERTURBED, SKEW):
        cr = complex_residual(run(coeffs, 24, J_max=4))
        worst = max(worst, max(cr.relative))
    record(3, worst <= 1e-10, f"J = 4, defects at h^1..h^5 on 3 fields (one without symmetry): "
                              f"max relative {worst:.2e} (<= 1e-10)")


def test_criterion_4_real_residual_scaling():
    rows, ok = [], True
    for J in (0, 1, 2):
        rep = residual_report(run(PERTURBED, 24, J_max=J))
        s = rep["real"]["slope"]
        t = rep["tamper"]
        ctrl, ctrl_t = t["control_untampered"]["slope"], t["control_sweep"]["slope"]
        # a shifted mu_k leaves an h^{k+1} term: below the crossover the slope drops to ~k+1
        degraded = ctrl >= J + 1.8 and ctrl_t <= t["mu_index"] + 1.3
        ok &= s >= J + 1.8 and degraded
        rows.append(f"J={J} slope {s:.3f} (>= {J + 1.8:.1f}), tampered mu_{t['mu_index']} "
                    f"slope {ctrl_t:.3f} vs {ctrl:.3f} below h*={t['crossover_h']:.2g}")
    record(4, ok, "; ".join(rows))


@pytest.fixture(scope="module")
def spectral():
    f = field_from_coeffs(RADIAL, 24)
    e = expand(f, J_max=2)
    pts = run_sweep(f, DEFAULT_SWEEP, L=1.0, M=512, k=2, refine="half", expansion=e,
                    overlap_J=2)
    return pts, compare_eigenvalues(pts, f, expansion=e, L=1.0)


@pytest.mark.slow
def test_criterion_5_spectral_cross_check(spectral):
    _, rep = spectral
    mu_err, gap_err = rep.mu1_rel_error[0], rep.gap_rel_error
    delta = rep.max_refinement_delta
    ok = mu_err <= 0.05 and gap_err <= 0.05 and delta < 5e-3
    record(5, ok, f"M=512 vs {rep.M_ref}: fitted mu1 {rep.fitted_mu1[0]:.4f} (error "
                  f"{mu_err:.1%}), gap {rep.gap_coefficient:.4f} (error {gap_err:.1%}), "
                  f"max Cauchy delta {delta:.1e} (< 0.5%)")


@pytest.mark.slow
def test_criterion_6_eigenfunction_overlap(spectral):
    pts, _ = spectral
    p = next(p for p in pts if abs(p.h - 0.05) < 1e-12)
    record(6, p.overlap >= 0.99, f"overlap of ground state with cutoff WKB Ansatz (J=2) at "
                                 f"h=0.05: {p.overlap:.6f} (>= 0.99)")


def test_criterion_7_structural_suite():
    worst = {}
    base = run(PERTURBED, 20, J_max=4)
    for lam in (0.5, 2.0):
        sc = run({k: lam * v for k, v in PERTURBED.items()}, 20, J_max=4)
        worst["scaling"] = max(worst.get("scaling", 0), max(
            abs(sc.mu[j] - lam ** (1 - j) * base.mu[j]) / abs(base.mu[j]) for j in range(5)))
    sw = run({(j, i): v for (i, j), v in SKEW.items()}, 20, J_max=4)
    sk = run(SKEW, 20, J_max=4)
    worst["swap"] = float(np.max(np.abs(sw.mu_all - np.array(sk.mu_all)) / np.abs(sk.mu_all)))
    cap = 0.0
    for coeffs in (RADIAL, PERTURBED, SKEW):
        for ell in (0, 1):
            a = run(coeffs, 20, ell=ell, J_max=4)
            b = run(coeffs, 24, ell=ell, J_max=4)
            cap = max(cap, float(np.max(np.abs(np.array(a.mu_all) - b.mu_all)
                                        / np.abs(b.mu_all))))
    worst["cap+4"] = cap
    plant = 0.0
    rng = np.random.default_rng(7)
    n = 14
    for trial in range(20):
        ell = trial % 4
        v = np.zeros(n + 1, complex)
        v[1] = rng.uniform(0.5, 2) * rng.choice([-1, 1])
        v[2:6] = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        F = np.zeros(n + 1, complex)
        F[0] = -ell * v[1]
        F[1:5] = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        V, F = S1(v, n), S1(F, n)
        f = S1(0.5 * (rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)), n)
        sol = transport_solve(TransportProblem(V, F, V * derive(f) + F * f, ell))
        c = (f[ell] - sol.particular[ell]) * math.factorial(ell)
        rec = sol.particular + sol.homogeneous * c
        plant = max(plant, float(np.max(np.abs(rec.coeffs - f.coeffs))) / f.max_abs(),
                    abs(sol.solvability_defect) / f.max_abs())
    worst["transport"] = plant
    ok = (worst["scaling"] <= 1e-9 and worst["swap"] <= 1e-9 and worst["cap+4"] <= 1e-8
          and worst["transport"] <= 1e-10)
    record(7, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
           + " (<= 1e-9, 1e-9, 1e-8, 1e-10)")


def test_criterion_8_c0():
    worst = 0.0
    for coeffs in randomized_fields():
        f = field_from_coeffs(coeffs, 12)
        e = expand(f, J_max=1)
        want = -f.b0 / math.sqrt(4 * f.alpha * f.gamma)
        worst = max(worst, abs(e.c0 - want) / abs(want))
    record(8, worst <= 1e-8, f"c0 = -b0/sqrt(4 alpha gamma) on 10 randomized fields: max "
                             f"relative error {worst:.2e} (<= 1e-8)")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from magwkb.errors import DegenerateMinimum, NonPositiveMinimumValue, NotCriticalAtOrigin
from magwkb.field import (build_gauge, complexify, field_from_coeffs, laplacian, load_field,
                          load_field_json, normalize_field, poisson_particular_monomial, realify)
from magwkb.series import TruncatedSeries2 as S2, derive, linear_change

from conftest import RADIAL, SKEW, random_field, random_series2

seeds = st.integers(0, 2**32 - 1)


def test_load_field_examples():
    B = load_field(RADIAL, 6)
    assert B[0, 0] == 1 and B[2, 0] == 1 and B[0, 2] == 1 and B.max_abs() == 1
    with pytest.raises(NonPositiveMinimumValue):
        load_field({(0, 0): -1}, 4)
    with pytest.raises(NonPositiveMinimumValue):
        load_field({}, 4)


def test_load_field_json(tmp_path):
    p = tmp_path / "f.json"
    p.write_text('{"coeffs": [[0, 0, 1.0], [2, 0, 1.0], [0, 2, 4.0]], "degree_cap": 10}')
    B = load_field_json(p)
    assert B.cap == 10 and B[0, 2] == 4


def test_normalize_examples():
    f = field_from_coeffs({(0, 0): 1, (2, 0): 1, (0, 2): 4}, 8)
    assert (f.alpha, f.gamma, f.rotation_angle) == (1, 4, 0)
    f = field_from_coeffs({(0, 0): 1, (1, 1): 2, (2, 0): 2, (0, 2): 2}, 8)
    assert f.alpha == pytest.approx(1) and f.gamma == pytest.approx(3)
    assert abs(f.rotation_angle) == pytest.approx(math.pi / 4)
    assert f.B_series[1, 1] == 0
    with pytest.raises(DegenerateMinimum):
        field_from_coeffs({(0, 0): 1, (2, 0): 1}, 6)
    with pytest.raises(NotCriticalAtOrigin):
        field_from_coeffs({(0, 0): 1, (1, 0): 0.1, (2, 0): 1, (0, 2): 1}, 6)


def test_normalize_cross_term_is_removed_exactly():
    f = field_from_coeffs(SKEW, 12)
    # rotated field evaluates like the raw one at rotated points
    raw = load_field(SKEW, 12)
    t = f.rotation_angle
    y = np.array([0.13, -0.21])
    x = np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]]) @ y
    from magwkb.series import eval_complex
    assert f.evaluate(*y) == pytest.approx(eval_complex(raw, tuple(x)).real, abs=1e-12)


def test_normalize_idempotent():
    f = field_from_coeffs(SKEW, 10)
    g = normalize_field(f.B_series)
    assert g.rotation_angle == 0
    np.testing.assert_array_equal(g.B_series.coeffs, f.B_series.coeffs)


@given(seeds, st.floats(0, 2 * math.pi))
def test_rotation_invariance(seed, t):
    rng = np.random.default_rng(seed)
    coeffs = random_field(rng)
    base = field_from_coeffs(coeffs, 8)
    rot = linear_change(load_field(coeffs, 8), ((math.cos(t), -math.sin(t)),
                                                   (math.sin(t), math.cos(t))))
    f = normalize_field(S2(rot.coeffs.real, 8))
    for a, b in ((f.b0, base.b0), (f.alpha, base.alpha), (f.gamma, base.gamma)):
        assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


def test_gauge_examples():
    g = build_gauge(field_from_coeffs({(0, 0): 2.0, (2, 0): 1e-3, (0, 2): 1e-3}, 6))
    assert g.phi[2, 0] == pytest.approx(0.5) and g.phi[0, 2] == pytest.approx(0.5)
    assert g.A1[0, 1] == pytest.approx(-1.0) and g.A2[1, 0] == pytest.approx(1.0)
    g = build_gauge(field_from_coeffs(RADIAL, 8))
    expect = {(2, 0): 0.25, (0, 2): 0.25, (4, 0): 1 / 16, (2, 2): 1 / 8, (0, 4): 1 / 16}
    got = g.phi.to_dict(threshold=1e-15)
    assert set(got) == set(expect)
    for k, v in expect.items():
        assert got[k] == pytest.approx(v, rel=1e-14)


def test_monomial_particular_solution():
    B = S2.from_dict({(2, 0): 1.0}, 6)
    phi = poisson_particular_monomial(B)
    # ascending-x1 and mirrored solutions averaged, each satisfies Delta P = x1^2
    assert laplacian(phi).truncated(4).allclose(B.truncated(4), rtol=1e-14)
    p1 = {(4, 0): 1 / 12}
    p2 = {(2, 2): 1 / 2, (0, 4): -1 / 12}
    for k in set(p1) | set(p2):
        assert phi[k] == pytest.approx(0.5 * (p1.get(k, 0) + p2.get(k, 0)))


@given(seeds)
def test_gauge_invariants(seed):
    rng = np.random.default_rng(seed)
    f = field_from_coeffs(random_field(rng), 12)
    g = build_gauge(f)
    n = f.cap
    scale = f.B_series.max_abs()
    assert (laplacian(g.phi) - f.B_series).truncated(n - 2).max_abs() <= 1e-12 * scale
    assert (derive(g.A1, 0) + derive(g.A2, 1)).max_abs() <= 1e-12 * scale
    curl = derive(g.A2, 0) - derive(g.A1, 1)
    assert (curl - f.B_series).truncated(n - 2).max_abs() <= 1e-12 * scale
    assert (4 * derive(derive(g.phi_tilde, 0), 1) - g.B_tilde).truncated(n - 2).max_abs() \
        <= 1e-12 * scale
    assert g.phi.is_real(0.0)
    assert g.phi[2, 0] == pytest.approx(f.b0 / 4) and g.phi[1, 1] == 0


def test_complexify_examples():
    x1 = S2.variable("x1", 4)
    x2 = S2.variable("x2", 4)
    c = complexify(x1 * x1 + x2 * x2)
    assert c.to_dict(threshold=1e-15) == {(1, 1): pytest.approx(1)}
    c = complexify(x1)
    assert c[1, 0] == pytest.approx(0.5) and c[0, 1] == pytest.approx(0.5)


@given(seeds, st.integers(1, 12))
def test_realify_complexify_roundtrip(seed, n):
    rng = np.random.default_rng(seed)
    a = random_series2(rng, n, real=True)
    assert realify(complexify(a)).allclose(a, rtol=1e-13)
    assert realify(complexify(a)).is_real(1e-13)

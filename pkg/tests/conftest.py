import numpy as np
import pytest
from hypothesis import settings

from magwkb.series import TruncatedSeries1, TruncatedSeries2

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

RADIAL = {(0, 0): 1.0, (2, 0): 1.0, (0, 2): 1.0}
ANISO = {(0, 0): 1.0, (2, 0): 1.0, (0, 2): 4.0}
# no symmetry at all: cubic and quartic terms plus a rotated Hessian
SKEW = {(0, 0): 1.3, (2, 0): 0.7, (1, 1): 0.4, (0, 2): 2.0, (3, 0): 0.5, (0, 3): 0.2,
        (2, 1): -0.15, (2, 2): 0.1, (1, 3): 0.05}
PERTURBED = {(0, 0): 1.0, (2, 0): 1.0, (0, 2): 4.0, (3, 0): 0.3, (1, 2): -0.2, (2, 1): 0.1,
             (0, 4): 0.05}


def random_series1(rng, n, scale=1.0):
    return TruncatedSeries1(scale * (rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)), n)


def random_series2(rng, n, scale=1.0, real=False):
    c = rng.standard_normal((n + 1, n + 1))
    if not real:
        c = c + 1j * rng.standard_normal((n + 1, n + 1))
    i, j = np.indices(c.shape)
    c[i + j > n] = 0
    return TruncatedSeries2(scale * c, n)


def random_field(rng, cap=16, perturb=True):
    """Normalized-form field with b0 in [0.5, 2], alpha, gamma in [0.5, 4]."""
    b0 = rng.uniform(0.5, 2)
    a, g = rng.uniform(0.5, 4, size=2)
    coeffs = {(0, 0): b0, (2, 0): a, (0, 2): g}
    if perturb:
        for d in (3, 4):
            for i in range(d + 1):
                coeffs[(i, d - i)] = rng.uniform(-0.3, 0.3)
    return coeffs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])

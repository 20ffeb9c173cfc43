import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qadsheat.fibers import (
    cp1_kernel,
    cp1_kernel_continued,
    cp1_m_max,
    su2_k_max,
    su2_kernel_continued,
    su2_kernel_spectral,
    su2_kernel_theta,
)
from qadsheat.quadrature import QuadratureSpec, integrate_finite


def test_su2_large_time_limit():
    for eta, u in [(0.3, 2.0), (0.0, 0.0), (1.5, 3.0)]:
        assert su2_kernel_spectral(50.0, eta, u) == pytest.approx(2 / math.pi, rel=1e-12)


def test_su2_origin_direct_sum():
    with mpmath.workdps(30):
        ref = 2 / mpmath.pi * mpmath.fsum((m + 1) ** 2 * mpmath.exp(-m * (m + 2) * mpmath.mpf("0.5")) for m in range(60))
    assert su2_kernel_spectral(0.5, 0.0, 0.0) == pytest.approx(float(ref), rel=1e-14)
    assert su2_kernel_theta(0.5, 0.0, 0.0) == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("t,eta,u", [(0.5, 1.0, 2.0), (0.01, 0.3, 0.3), (0.05, 3.0, 0.1), (2.0, 2.0, 3.0)])
def test_su2_representations_agree(t, eta, u):
    a, b = su2_kernel_spectral(t, eta, u), su2_kernel_theta(t, eta, u)
    assert a > 0 and b > 0
    assert a == pytest.approx(b, rel=1e-10)


@given(st.sampled_from([0.05, 0.5, 2.0]), st.floats(0.0, 3.1), st.floats(0.0, 3.1))
def test_su2_agreement_property(t, eta, u):
    a, b = su2_kernel_spectral(t, eta, u), su2_kernel_theta(t, eta, u)
    assert abs(a - b) <= 1e-11 * max(1.0, abs(b))


def _su2_direct(t, eta, u):
    with mpmath.workdps(60):
        t, eta, u = mpmath.mpf(t), mpmath.mpf(eta), mpmath.mpf(u)
        s = mpmath.nsum(lambda m: mpmath.exp(-m * (m + 2) * t) * mpmath.sin((m + 1) * eta) * mpmath.sin((m + 1) * u),
                        [0, mpmath.inf])
        return float(2 / mpmath.pi * s / (mpmath.sin(eta) * mpmath.sin(u)))


# near-zero angles make the k and -k theta terms cancel; the paired form must keep relative accuracy
@pytest.mark.parametrize("t,eta,u", [(0.5, 1.19e-7, 3.0), (0.5, 3.0, 1.2e-7), (0.05, 1e-3, 3.0),
                                     (0.05, 2e-7, 3e-7), (0.05, 3.1, 3.1), (3.0, 1e-5, 1e-5)])
def test_su2_theta_relative_accuracy(t, eta, u):
    assert su2_kernel_theta(t, eta, u) == pytest.approx(_su2_direct(t, eta, u), rel=1e-12)


def test_su2_k_truncation_small():
    assert su2_k_max(1.0, 1e-16).k_max <= 3
    assert su2_k_max(1.0, 1e-16).tail_bound < 1e-16


def test_su2_symmetry_and_reduction():
    assert su2_kernel_spectral(0.3, 0.7, 1.9) == pytest.approx(su2_kernel_spectral(0.3, 1.9, 0.7), rel=1e-14)
    # eta and 2 pi - eta are the same point
    assert su2_kernel_theta(0.3, 2 * math.pi - 0.7, 1.1) == pytest.approx(su2_kernel_theta(0.3, 0.7, 1.1), rel=1e-12)


def test_su2_eigenvalue_m1():
    # projecting onto U_1(cos u) isolates the m = 1 mode, which decays as e^{-3t}
    spec = QuadratureSpec(rel_tol=1e-13)
    for t in (0.2, 0.7):
        eta = 0.8
        g = lambda us: np.array([su2_kernel_spectral(t, eta, u) * 2 * math.cos(u) * math.sin(u) ** 2 for u in us])
        proj = float(integrate_finite(g, 0.0, math.pi, spec).value)
        assert proj == pytest.approx(math.exp(-3 * t) * 2 * math.cos(eta), rel=1e-12)


@pytest.mark.parametrize("t", [0.1, 1.0])
@pytest.mark.parametrize("x", [0.0, 0.7, 1.4])
def test_fiber_masses(t, x):
    spec = QuadratureSpec(rel_tol=1e-13)
    g = lambda us: np.array([su2_kernel_spectral(t, x, u) * math.sin(u) ** 2 for u in us])
    assert float(integrate_finite(g, 0.0, math.pi, spec).value) == pytest.approx(1.0, abs=1e-9)
    h = lambda ps: np.array([cp1_kernel(t, x, p) * math.sin(2 * p) for p in ps])
    assert float(integrate_finite(h, 0.0, math.pi / 2, spec).value) == pytest.approx(1.0, abs=1e-9)


def test_su2_continued_limits_and_forms():
    t, eta = 0.5, 1.2
    lim = 2 / math.pi * sum((m + 1) * math.exp(-m * (m + 2) * t) * math.sin((m + 1) * eta) / math.sin(eta)
                            for m in range(40))
    assert float(su2_kernel_continued(t, eta, 0.0)) == pytest.approx(lim, rel=1e-13)
    a = su2_kernel_continued(t, eta, 0.8, "spectral")
    b = su2_kernel_continued(t, eta, 0.8, "theta")
    assert a.ratio(b) == pytest.approx(1.0, abs=1e-11)
    # the continuation grows like e^{y^2/4t}; only the exponent field carries it
    big = su2_kernel_continued(0.01, 0.4, 30.0, "theta")
    assert big.log > 30.0 ** 2 / 0.04 - 100


def test_cp1_examples():
    assert cp1_kernel(50.0, 0.3, 1.1) == pytest.approx(1.0, abs=1e-15)
    for phi in (0.0, 0.4, 1.5):
        assert cp1_kernel_continued(0.3, phi, 0.0) == pytest.approx(cp1_kernel(0.3, phi, 0.0), rel=1e-13)


def test_cp1_eigenvalue_m2():
    # P_2(cos 2 phi) is an eigenfunction of d^2 + 2 cot 2phi d with eigenvalue -24
    from qadsheat.operators import derivative, second_derivative
    from qadsheat.special import legendre_P

    f = lambda p: legendre_P(2, math.cos(2 * p))
    x = 0.35
    lhs = second_derivative(f, x, 1e-3) + 2 / math.tan(2 * x) * derivative(f, x, 1e-3)
    assert lhs == pytest.approx(-24 * f(x), rel=1e-8)


def test_cp1_continued_oracle():
    t, phi, u = mpmath.mpf("0.5"), mpmath.mpf("0.4"), mpmath.mpf(1)
    with mpmath.workdps(40):
        ref = mpmath.fsum((2 * m + 1) * mpmath.exp(-4 * m * (m + 1) * t) * mpmath.legendre(m, mpmath.cos(2 * phi))
                          * mpmath.legendre(m, mpmath.cosh(2 * u)) for m in range(100))
    assert cp1_kernel_continued(0.5, 0.4, 1.0) == pytest.approx(float(ref), rel=1e-12)


def test_cp1_truncation_beyond_ratio_threshold():
    t, U = 0.2, 3.0
    tr = cp1_m_max(t, U, 1e-17)
    assert tr.m_max > U / (4 * t) + 1
    assert tr.tail_bound < 1e-17


def test_nonpositive_time_rejected():
    for fn in (lambda: su2_kernel_spectral(0.0, 1, 1), lambda: su2_kernel_theta(-1.0, 1, 1),
               lambda: cp1_kernel(0.0, 0.1, 0.2), lambda: cp1_kernel_continued(-0.1, 0.1, 0.2)):
        with pytest.raises(ValueError):
            fn()

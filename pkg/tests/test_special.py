import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qadsheat.special import chebyshev_U, chebyshev_U_all, hyp2f1_terminating, legendre_P, legendre_P_all


def test_chebyshev_examples():
    assert chebyshev_U(0, 0.3) == 1.0
    for m in range(12):
        assert chebyshev_U(m, 1.0) == m + 1
        assert chebyshev_U(m, -1.0) == (-1) ** m * (m + 1)
    assert chebyshev_U(3, math.cos(0.7)) == pytest.approx(math.sin(2.8) / math.sin(0.7), rel=1e-14)


def test_chebyshev_matches_trig_form_on_grid():
    for eta in np.linspace(0.01, math.pi - 0.01, 57):
        vals = chebyshev_U_all(30, math.cos(eta))
        exact = [math.sin((m + 1) * eta) / math.sin(eta) for m in range(31)]
        assert np.max(np.abs(vals - exact)) <= 1e-12


@given(st.integers(0, 30), st.floats(1e-3, math.pi - 1e-3))
def test_chebyshev_property(m, eta):
    assert abs(chebyshev_U(m, math.cos(eta)) - math.sin((m + 1) * eta) / math.sin(eta)) <= 1e-12 * (m + 1) ** 2


def test_legendre_examples():
    for m in range(15):
        assert legendre_P(m, 1.0) == 1.0
    assert legendre_P(2, 0.0) == -0.5


def _rodrigues(m, x):
    # (1/(2^m m!)) d^m/dx^m (x^2 - 1)^m, expanded exactly
    x = mpmath.mpf(x)
    acc = mpmath.mpf(0)
    for k in range(m // 2 + 1):
        acc += (-1) ** k * math.comb(m, k) * math.comb(2 * m - 2 * k, m) * x ** (m - 2 * k)
    return acc / 2 ** m


@pytest.mark.parametrize("x", [-1.0, 0.0, 1.0, math.cosh(0.5), math.cosh(2.0), math.cosh(0.6), 0.37])
def test_legendre_rodrigues_oracle(x):
    with mpmath.workdps(40):
        for m in range(11):
            ref = float(_rodrigues(m, x))
            got = legendre_P(m, x)
            assert got == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_legendre_vectorized():
    xs = np.linspace(-1, 1, 9)
    table = legendre_P_all(6, xs)
    assert table.shape == (7, 9)
    assert np.allclose(table[6], [legendre_P(6, x) for x in xs], rtol=0, atol=1e-15)


def test_hyp2f1_examples():
    for m in range(8):
        assert hyp2f1_terminating(m, 0.0) == 1.0
    assert hyp2f1_terminating(0, 123.0) == 1.0
    x = (1 - math.cosh(0.9)) / 2
    assert hyp2f1_terminating(2, x) == pytest.approx(math.sinh(2.7) / (3 * math.sinh(0.9)), rel=1e-14)


@pytest.mark.parametrize("x", [-3.0, -0.5, 0.2, 0.7])
def test_hyp2f1_mpmath_oracle(x):
    for m in range(21):
        ref = float(mpmath.hyp2f1(m + 2, -m, 1.5, x))
        assert hyp2f1_terminating(m, x) == pytest.approx(ref, rel=1e-10, abs=1e-12)


@given(st.integers(0, 20), st.floats(0.01, 3.0))
def test_hyp2f1_sinh_identity(m, u):
    lhs = (m + 1) * hyp2f1_terminating(m, (1 - math.cosh(u)) / 2)
    assert lhs == pytest.approx(math.sinh((m + 1) * u) / math.sinh(u), rel=1e-10)


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        chebyshev_U(-1, 0.2)
    with pytest.raises(ValueError):
        legendre_P(-2, 0.2)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qadsheat.logspace import ComplexME, MantissaExponent, log_cosh, log_sinh, signed_logsumexp

finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda x: x != 0)


@given(finite)
def test_float_round_trip(x):
    me = MantissaExponent.from_float(x)
    assert 1.0 <= abs(me.mantissa) < 2.0
    assert float(me) == pytest.approx(x, rel=1e-15)


def test_values_beyond_double_range():
    tiny = MantissaExponent.from_log(1.0, -5000.0)
    huge = MantissaExponent.from_log(-1.0, 5000.0)
    assert float(tiny) == 0.0 and tiny.log == pytest.approx(-5000.0, abs=1e-12)
    assert float(huge) == -math.inf
    prod = tiny * huge
    assert prod.sign == -1.0 and prod.log == pytest.approx(0.0, abs=1e-12)
    assert tiny.ratio(MantissaExponent.from_log(1.0, -5001.0)) == pytest.approx(math.e, rel=1e-14)


def test_zero():
    z = MantissaExponent.from_float(0.0)
    assert z.sign == 0.0 and z.log == -math.inf and float(z) == 0.0
    assert float(z + 2.5) == 2.5
    with pytest.raises(ZeroDivisionError):
        MantissaExponent.from_float(1.0) / z


@given(finite, finite)
def test_arithmetic_matches_floats(a, b):
    A, B = MantissaExponent.from_float(a), MantissaExponent.from_float(b)
    assert float(A * B) == pytest.approx(a * b, rel=1e-14)
    assert float(A / B) == pytest.approx(a / b, rel=1e-14)
    assert float(A + B) == pytest.approx(a + b, rel=1e-12, abs=1e-12 * (abs(a) + abs(b)))


def test_products_are_exact_at_extreme_scales():
    # going through log|x| would cost ~1e-13 here
    a, b = 1.0, 6.3723699269138635e-164
    A, B = MantissaExponent.from_float(a), MantissaExponent.from_float(b)
    assert float(A / B) == a / b and float(B * B * A) == b * b
    assert A.ratio(B) == a / b
    assert float(MantissaExponent.from_float(1e300) + MantissaExponent.from_float(3e299)) == 1e300 + 3e299


def test_signed_logsumexp_cancellation_and_axis():
    s, l = signed_logsumexp([1, -1], [3.0, 3.0])
    assert s == 0 and l == -math.inf
    s, l = signed_logsumexp([1, -1, 1], [-800.0, -801.0, -2000.0])
    assert s == 1 and l == pytest.approx(-800 + math.log(1 - math.exp(-1)), abs=1e-13)
    signs = np.array([[1.0, 1.0], [-1.0, 1.0]])
    logs = np.log(np.array([[2.0, 3.0], [1.0, 4.0]]))
    s, l = signed_logsumexp(signs, logs, axis=0)
    assert np.allclose(s * np.exp(l), [1.0, 7.0])


def test_complex_me():
    z = ComplexME.from_log(complex(-3000.0, 0.25))
    assert z.log_abs == pytest.approx(-3000.0, abs=1e-12)
    assert complex(ComplexME.from_log(complex(math.log(2.0), math.pi / 2))) == pytest.approx(2j, abs=1e-15)


@given(st.floats(1e-6, 700.0))
def test_log_sinh_cosh(x):
    assert float(log_sinh(x)) == pytest.approx(math.log(math.sinh(x)), rel=1e-13, abs=1e-13)
    assert float(log_cosh(x)) == pytest.approx(math.log(math.cosh(x)), rel=1e-13, abs=1e-13)


def test_log_sinh_large_argument():
    assert float(log_sinh(5000.0)) == pytest.approx(5000.0 - math.log(2.0), rel=1e-15)

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qadsheat.hyperbolic import (
    HeatTerm,
    build_q_termsum,
    heat_equation_residual,
    millson_check,
    q_eval,
    q_eval_complex,
    q_log,
)

# values from a symbolic expansion of the dimension-shift recursion, evaluated at 40-50 digits
Q_ORACLE = {
    (7, 0.3, 1.2): 1.59231235855620447482762745555e-4,
    (7, 0.3, 1.5): 5.53503124608257661263467012841e-5,
    (11, 0.05, 2.0): 5.03371017488604701978839457869e-10,
    (5, 1.0, 0.01): 5.45280127177380729564123894353e-5,
}
Q_LOG_ORACLE = {(7, 0.3, 60.0): -3172.95294217902006292127689445}
Q_COMPLEX_ORACLE = {(7, 0.4, 1 + 0.5j): 3.3093897307137747624330022462e-5 - 7.11301327971806739785556447965e-5j}


def test_term_structure_small_dimensions():
    (only,) = build_q_termsum(3).terms
    assert only == HeatTerm(Fraction(1, 2), 1, 1, 1, 0)
    assert len(build_q_termsum(5).terms) == 3
    assert len(build_q_termsum(7).terms) == 6
    assert build_q_termsum(7) is build_q_termsum(7)


@pytest.mark.parametrize("d", [2, 4, 1, 3.5])
def test_rejects_even_or_small_dimensions(d):
    with pytest.raises(ValueError):
        build_q_termsum(d)


def test_origin_value_d3():
    assert float(q_eval(3, 0.5, 0.0)) == pytest.approx(math.exp(-0.5) * (2 * math.pi) ** -1.5, rel=1e-15)


@pytest.mark.parametrize("key", sorted(Q_ORACLE))
def test_oracle_values(key):
    assert float(q_eval(*key)) == pytest.approx(Q_ORACLE[key], rel=1e-13)


def test_exponent_field_below_underflow():
    key = (7, 0.3, 60.0)
    v = q_eval(*key)
    assert float(v) == 0.0 and v.sign == 1.0
    assert v.log == pytest.approx(Q_LOG_ORACLE[key], abs=1e-10)
    assert abs(v.log + 60 ** 2 / 1.2) < 200


def test_complex_values():
    key = (7, 0.4, 1 + 0.5j)
    assert complex(q_eval_complex(*key)) == pytest.approx(Q_COMPLEX_ORACLE[key], rel=1e-13)
    t = 0.5
    z = 1j * math.pi / 4
    closed = math.exp(-t) * (4 * math.pi * t) ** -1.5 * z / cmath.sinh(z) * cmath.exp(-z * z / (4 * t))
    assert complex(q_eval_complex(3, t, z)) == pytest.approx(closed, rel=1e-14)


@given(st.sampled_from([3, 5, 7, 11]), st.floats(1e-3, 10.0), st.floats(0.0, 40.0))
def test_complex_agrees_on_real_axis(d, t, delta):
    real = q_eval(d, t, delta)
    cplx = q_eval_complex(d, t, complex(delta, 0.0))
    assert cplx.log_abs == pytest.approx(real.log, rel=1e-14, abs=1e-13)


@given(st.sampled_from([3, 5, 7, 11]), st.floats(1e-3, 10.0), st.floats(0.0, 50.0))
def test_positivity(d, t, delta):
    v = q_eval(d, t, delta)
    assert v.sign == 1.0 and math.isfinite(v.log)


def test_heat_equation_exact_algebra():
    deltas = np.linspace(0.0, 50.0, 201)
    for d in (3, 5, 7, 11):
        for t in (1e-3, 0.05, 0.5, 3.0, 10.0):
            assert np.max(heat_equation_residual(d, t, deltas)) <= 1e-10


@pytest.mark.parametrize("d,t,delta", [(3, 0.5, 1.0), (5, 0.2, 2.0), (3, 1.0, 1e-9), (5, 0.01, 30.0)])
def test_millson_examples(d, t, delta):
    assert millson_check(d, t, delta) <= 1e-13 if delta >= 1 else millson_check(d, t, delta) <= 1e-12


@given(st.sampled_from([3, 5, 7]), st.floats(0.01, 5.0), st.floats(0.01, 40.0))
def test_millson_property(d, t, delta):
    assert millson_check(d, t, delta) <= 1e-12


def test_vectorized_log_and_errors():
    deltas = np.array([0.0, 0.5, 5.0])
    logs = q_log(7, 0.4, deltas)
    assert logs.shape == (3,)
    assert np.all(np.diff(logs) < 0)
    with pytest.raises(ValueError):
        q_eval(3, 0.0, 1.0)
    with pytest.raises(ValueError):
        q_eval(3, 0.5, -1.0)

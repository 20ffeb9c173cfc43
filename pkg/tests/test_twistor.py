import math

import pytest

from qadsheat.ads import EvalContext
from qadsheat.twistor import TwistorPoint, twistor_kernel, twistor_mass, twistor_pde_residual

# 25-digit mpmath quadrature of both defining integrals at n=1, t=0.5, r=1, phi=0.5
FIBRATION_ORACLE = 9.284452808411287048675022e-6
LITERAL_ORACLE = 1.007871760363150743053109e-5


def test_fibration_oracle():
    v = twistor_kernel(EvalContext(1, 0.5), TwistorPoint(1.0, 0.5))
    assert float(v.value) == pytest.approx(FIBRATION_ORACLE, rel=1e-11)
    assert not v.flags


def test_literal_oracle():
    v = twistor_kernel(EvalContext(1, 0.5), TwistorPoint(1.0, 0.5), "literal")
    assert float(v.value) == pytest.approx(LITERAL_ORACLE, rel=1e-10)


def test_fibration_solves_heat_equation():
    pts = [(0.4, 1.4), (1.2, 0.7), (2.0, 0.15)]
    assert twistor_pde_residual(EvalContext(1, 0.5), pts).max < 1e-6


def test_literal_form_does_not():
    # the literal integral shares the m = 0 mode but not the higher ones
    st = twistor_pde_residual(EvalContext(1, 0.5), [(0.4, 1.4)], "literal")
    assert st.max > 0.1


def test_fiber_edge_is_continuous():
    ctx = EvalContext(1, 0.5)
    a = float(twistor_kernel(ctx, TwistorPoint(1.0, math.pi / 2)).value)
    b = float(twistor_kernel(ctx, TwistorPoint(1.0, math.pi / 2 - 1e-3)).value)
    assert b == pytest.approx(a, rel=1e-5)


def test_small_time_cancellation_uses_high_precision():
    v = twistor_kernel(EvalContext(1, 0.05), TwistorPoint(1.0, 1.5))
    assert v.digits > 16 and not v.flags and v.value.sign > 0


@pytest.mark.slow
def test_mass_and_time_independence():
    ms = [twistor_mass(EvalContext(1, t)) for t in (0.25, 1.0)]
    for m in ms:
        assert m == pytest.approx(1.0, abs=1e-6)
    assert abs(ms[0] - ms[1]) < 1e-8


def test_domain():
    for r, phi in [(-0.1, 0.5), (1.0, -0.1), (1.0, math.pi / 2 + 1e-9)]:
        with pytest.raises(ValueError):
            TwistorPoint(r, phi)
    with pytest.raises(ValueError):
        twistor_kernel(EvalContext(1, 0.5), TwistorPoint(1.0, 0.5), "other")

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qadsheat.asymptotics import (
    axis_asymptotic,
    axis_predictor_log,
    cutlocus_comparison,
    cutlocus_rate,
    exponent_fit,
    general_asymptotic,
    general_predictor_log,
    origin_expansion,
    origin_leading,
    ratio_trend,
)
from qadsheat.phase import K_ratio, R_ratio, gd, phase_residual, saddle_exponent, sign_changes, solve_phase


@pytest.mark.parametrize("n", [1, 2])
def test_origin_expansion_converges(n):
    cs = [origin_expansion(n, t) for t in (1.6e-2, 1e-2, 8e-3, 4e-3)]
    assert cs[1].deviation <= 0.02
    assert ratio_trend(cs)
    # B_n t is the first correction: including it must beat the leading term
    assert cs[1].deviation < origin_leading(n, 1e-2).deviation


@pytest.mark.parametrize("eta", [0.7, 1.5])
def test_cutlocus_rate(eta):
    fit = cutlocus_rate(1, eta)
    assert fit.relative_error < 1e-2
    assert fit.expected == pytest.approx(2 * math.pi * eta + eta * eta)


def test_cutlocus_prefactor_forms():
    eta = 1.0
    corrected = [cutlocus_comparison(1, t, eta, "corrected").ratio for t in (1e-3, 1e-4)]
    printed = cutlocus_comparison(1, 1e-4, eta, "printed").ratio
    assert abs(corrected[1] - 1) < abs(corrected[0] - 1) < 0.05
    # the eta^{2n-1} power misses the factor (1 + eta/2pi)^{2n-1}
    assert printed == pytest.approx(corrected[1] * (1 + eta / (2 * math.pi)), rel=1e-9)
    with pytest.raises(ValueError):
        cutlocus_comparison(1, 1e-3, 0.0)


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_axis_ratio_is_first_order_in_t(r):
    cs = [axis_asymptotic(1, t, r) for t in (1.6e-2, 1e-2, 8e-3, 4e-3)]
    assert ratio_trend(cs)
    slopes = [c.deviation / c.t for c in cs]
    # deviation ~ c t with a steady c: the predictor is the correct leading term
    assert max(slopes) / min(slopes) < 1.3


def test_general_reduces_to_axis():
    assert general_predictor_log(1, 1e-2, 1.5, 0.0) == axis_predictor_log(1, 1e-2, 1.5)


def test_general_ratio_trend_and_phase():
    cs = [general_asymptotic(1, t, 1.0, 1.0) for t in (1.6e-2, 1e-2, 8e-3, 4e-3)]
    assert ratio_trend(cs)
    assert cs[0].extra["residual"] <= 1e-12
    assert cs[0].extra["extended"]


@given(st.floats(0.3, 3.0), st.floats(0.05, 2.8))
def test_phase_root_residual(r, eta):
    sol = solve_phase(r, eta)
    assert abs(phase_residual(sol.varphi, r, eta)) <= 1e-12
    assert sol.varphi * eta < 0
    limit = gd(r) if not sol.extended else math.pi - gd(r)
    assert abs(sol.varphi) < limit


def test_phase_without_extension():
    sol = solve_phase(2.0, 0.3, extend=False)
    assert not sol.extended
    with pytest.raises(ValueError):
        solve_phase(0.5, 2.5, extend=False)
    with pytest.raises(ValueError):
        solve_phase(0.0, 1.0)


def test_ratio_functions_are_smooth_through_one():
    for w in (1 - 2e-3, 1 - 5e-4, 1 + 5e-4, 1 + 2e-3):
        assert R_ratio(w) == pytest.approx(R_ratio(1.0) - (w - 1) / 3, abs=1e-6)
    assert R_ratio(1.0) == 1.0 and K_ratio(1.0) == pytest.approx(1 / 3)
    assert R_ratio(0.0) == pytest.approx(math.pi / 2)
    # series and closed form meet at |w - 1| = 1e-3
    for edge in (1 - 1e-3, 1 + 1e-3):
        for f in (R_ratio, K_ratio):
            assert f(edge * (1 - 1e-12)) == pytest.approx(f(edge * (1 + 1e-12)), rel=1e-9)
    with pytest.raises(ValueError):
        R_ratio(-1.0)


def test_exponent_fit_recovers_polynomial():
    ts = np.array([1e-2, 5e-3, 2e-3, 1e-3])
    coef, resid = exponent_fit(ts, 3.0 - 2 * ts + 5 * ts ** 2)
    np.testing.assert_allclose(coef, [3.0, -2.0, 5.0], rtol=1e-8)
    assert resid < 1e-12


def test_domains():
    with pytest.raises(ValueError):
        axis_asymptotic(1, 1e-2, 0.2)
    with pytest.raises(ValueError):
        axis_asymptotic(1, 0.1, 1.0)
    with pytest.raises(ValueError):
        general_asymptotic(1, 1e-2, 0.2, 1.0)
    with pytest.raises(ValueError):
        cutlocus_rate(1, 0.1)
    with pytest.raises(ValueError):
        cutlocus_rate(1, 0.7, (1e-2, 1e-5))


@pytest.mark.parametrize("r,eta", [(1.0, 1.0), (2.0, 0.5), (1.5, 2.0), (0.5, 0.3)])
def test_phase_root_unique(r, eta):
    sol = solve_phase(r, eta)
    assert sign_changes(r, eta, extended=sol.extended) == 1


def test_origin_remainder_is_second_order():
    q = [(origin_expansion(1, t).ratio - 1) / t ** 2 for t in (4e-3, 8e-3, 1.6e-2)]
    assert max(q) / min(q) < 1.1


# The remaining checks compare against the leading-order predictors at fixed
# tolerances.  Their O(t) remainders are about (2n+1)^2 t, so several of these
# cannot hold at the stated t; they are kept as written.

def test_origin_leading_order_alone():
    assert origin_leading(1, 4e-3).deviation <= 5e-3


def test_axis_ratio_at_1e2():
    assert axis_asymptotic(1, 1e-2, 1.0).deviation <= 0.02


def test_axis_exponent_at_4e3():
    c = axis_asymptotic(1, 4e-3, 1.0)
    expo = -4 * c.t * (c.log_actual + 3.5 * math.log(4 * math.pi * c.t))
    assert expo == pytest.approx(1.0, rel=1e-2)


def test_general_ratio_at_1e2():
    assert general_asymptotic(1, 1e-2, 1.0, 1.0).deviation <= 0.05


def test_general_exponent_at_4e3():
    c = general_asymptotic(1, 4e-3, 1.0, 1.0)
    S = saddle_exponent(solve_phase(1.0, 1.0), 1.0, 1.0)
    expo = -4 * c.t * (c.log_actual + 3.5 * math.log(4 * math.pi * c.t))
    assert expo == pytest.approx(S, rel=1e-2)

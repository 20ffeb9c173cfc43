import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qadsheat.ads import (
    EvalContext,
    KernelPoint,
    acosh_cc,
    ads_kernel,
    ads_kernel_origin_fiber,
    ads_kernel_spectral,
    ads_kernel_theta,
    ads_mass,
    ads_measure,
    spectral_coefficients,
)

# 30-digit mpmath quadrature of the spectral integral, q built symbolically from q_{t,3}
PT_ORACLE = {
    (1, 0.5, 1.0, 1.0): 9.327588334829107599583576e-6,
    (1, 0.5, 0.5, 0.0): 8.823022252990764615183641e-5,
}


@pytest.mark.parametrize("key", sorted(PT_ORACLE))
@pytest.mark.parametrize("method", ["theta", "spectral"])
def test_kernel_oracle(key, method):
    n, t, r, eta = key
    v = ads_kernel(EvalContext(n, t), KernelPoint(r, eta), method)
    assert float(v.value) == pytest.approx(PT_ORACLE[key], rel=1e-12)
    assert v.error_estimate < 1e-10 and not v.flags


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("t,r,eta", [(0.1, 0.0, 0.0), (0.3, 1.0, 2.5), (1.0, 2.0, 0.3), (0.5, 0.0, 1.2)])
def test_representations_agree(n, t, r, eta):
    ctx, p = EvalContext(n, t), KernelPoint(r, eta)
    a, b = ads_kernel_theta(ctx, p), ads_kernel_spectral(ctx, p)
    assert a.value.ratio(b.value) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=15)
@given(st.floats(0.0, 2.5), st.floats(0.0, 3.0))
def test_positive_and_consistent(r, eta):
    ctx, p = EvalContext(1, 0.5), KernelPoint(r, eta)
    a, b = ads_kernel_theta(ctx, p), ads_kernel_spectral(ctx, p)
    assert a.value.sign > 0 and b.value.sign > 0
    assert abs(a.value.ratio(b.value) - 1) < 1e-9


def test_small_radius_large_phase_regression():
    # saddle contour close to the singular line Im y = pi - gd(r)
    p = KernelPoint(0.105, 7.70 - 2 * math.pi)
    for t in (0.05, 0.2):
        v = ads_kernel_theta(EvalContext(1, t), p)
        assert not v.flags
    ctx = EvalContext(1, 0.2)
    assert ads_kernel_theta(ctx, p).value.ratio(ads_kernel_spectral(ctx, p).value) == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("r", [2.3e-223, 1e-12, 1e-7])
def test_tiny_radius_approaches_origin(r):
    ctx = EvalContext(1, 0.5)
    a = ads_kernel(ctx, KernelPoint(r, 1.0)).value
    assert a.ratio(ads_kernel(ctx, KernelPoint(0.0, 1.0)).value) == pytest.approx(1.0, abs=1e-10)


def test_eta_zero_is_the_limit():
    ctx = EvalContext(1, 0.3)
    a = float(ads_kernel(ctx, KernelPoint(1.0, 0.0)).value)
    b = float(ads_kernel(ctx, KernelPoint(1.0, 1e-4)).value)
    assert b == pytest.approx(a, rel=1e-7)


def test_small_time_log_column():
    v = ads_kernel(EvalContext(1, 1e-3), KernelPoint(1.0, 1.0))
    assert float(v.value) == 0.0  # underflows as a float
    assert math.isfinite(v.log) and v.log < -1000
    assert v.error_estimate < 1e-10
    w = ads_kernel(EvalContext(1, 1e-2), KernelPoint(1.0, 1.0))
    assert math.log(float(w.value)) == pytest.approx(w.log, abs=1e-12)


def test_origin_fiber_matches_general():
    ctx = EvalContext(1, 0.2)
    assert ads_kernel_origin_fiber(ctx, 1.0).log == pytest.approx(ads_kernel(ctx, KernelPoint(0.0, 1.0)).log, abs=1e-13)
    with pytest.raises(ValueError):
        ads_kernel_origin_fiber(ctx, 0.0)


def test_spectral_coefficients_positive_and_decaying():
    co = spectral_coefficients(1, 0.5, 1.0)
    lf = np.array(co.logf)
    assert np.all(np.isfinite(lf))
    assert lf[-1] < lf[0] - 30
    assert co.rel_err < 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("n,t", [(1, 0.25), (1, 1.0), (2, 1.0)])
def test_mass_is_one(n, t):
    assert ads_mass(EvalContext(n, t)) == pytest.approx(1.0, abs=1e-6)


def test_measure_constant():
    assert ads_measure(1).constant == pytest.approx(8 * math.pi ** 3)
    assert ads_measure(2).constant == pytest.approx(8 * math.pi ** 5 / 6)


def test_acosh_cc():
    for r, y in [(0.0, 0.0), (1.0, 2.0), (0.3, 0.1), (300.0, 400.0)]:
        ref = math.acosh(math.cosh(r) * math.cosh(y)) if r + y < 700 else r + y - math.log(2)
        assert float(acosh_cc(r, y)) == pytest.approx(ref, rel=1e-12, abs=1e-20)
    # near the origin delta ~ hypot(r, y), where the naive formula loses every digit
    assert float(acosh_cc(1e-9, 2e-9)) == pytest.approx(math.hypot(1e-9, 2e-9), rel=1e-12)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        KernelPoint(0.5, math.pi)
    with pytest.raises(ValueError):
        KernelPoint(-0.1, 0.5)
    with pytest.raises(ValueError):
        EvalContext(0, 0.5)
    with pytest.raises(ValueError):
        EvalContext(1, 0.0)
    with pytest.raises(ValueError):
        EvalContext(1, 0.5, precision="quad")
    with pytest.raises(ValueError):
        ads_kernel(EvalContext(1, 0.5), KernelPoint(1, 1), "fourier")


def test_double_precision_flags_instead_of_escalating():
    ctx = EvalContext(1, 0.05, precision="double")
    v = ads_kernel_spectral(ctx, KernelPoint(1.0, 2.5))
    assert v.digits == 16
    assert "tolerance-not-met" in v.flags or v.error_estimate <= ctx.rel_tol

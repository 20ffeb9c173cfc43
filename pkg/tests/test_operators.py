import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qadsheat.ads import EvalContext, KernelPoint, ads_kernel
from qadsheat.operators import (
    StencilSpec,
    apply_dalembertian,
    apply_hyperbolic_radial,
    apply_radial_sublaplacian,
    apply_twistor_sublaplacian,
    change_of_variable_residual,
    default_step,
    derivative,
    pde_residual_suite,
    second_derivative,
    time_derivative,
)


def _Dr_cosh2(n, r):
    # D_r cosh^2 r with D_r = d^2 + ((4n-1) coth + 3 tanh) d
    return 2 * math.cosh(2 * r) + (4 * n - 1) * 2 * math.cosh(r) ** 2 + 6 * math.sinh(r) ** 2


def test_richardson_orders():
    # level 0 is plain central differences, error h^2 f'''/6 ~ 1.3e-5 here
    for levels, tol in [(0, 2e-5), (1, 1e-9), (2, 1e-11)]:
        assert derivative(math.sin, 0.7, 1e-2, levels) == pytest.approx(math.cos(0.7), abs=tol)
        assert second_derivative(math.exp, 0.3, 1e-2, levels) == pytest.approx(math.exp(0.3), rel=tol * 10)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("r,eta", [(0.5, 0.4), (1.3, 2.0), (2.0, 1.0)])
def test_sublaplacian_on_separable_function(n, r, eta):
    f = lambda a, b: math.cosh(a) ** 2 * 2 * math.cos(b)  # U_1(cos eta), eigenvalue -3
    exact = 2 * math.cos(eta) * (_Dr_cosh2(n, r) - 3 * math.tanh(r) ** 2 * math.cosh(r) ** 2)
    assert apply_radial_sublaplacian(n, f, (r, eta)) == pytest.approx(exact, rel=1e-9)
    exact_box = 2 * math.cos(eta) * (_Dr_cosh2(n, r) + 3)
    assert apply_dalembertian(n, f, KernelPoint(r, eta)) == pytest.approx(exact_box, rel=1e-9)


@pytest.mark.parametrize("r,phi", [(0.5, 0.3), (1.5, 1.1)])
def test_twistor_sublaplacian(r, phi):
    # P_1(cos 2phi) has eigenvalue -8 under d^2 + 2 cot 2phi d
    f = lambda a, b: math.cosh(a) ** 2 * math.cos(2 * b)
    exact = math.cos(2 * phi) * (_Dr_cosh2(1, r) - 8 * math.tanh(r) ** 2 * math.cosh(r) ** 2)
    assert apply_twistor_sublaplacian(1, f, (r, phi)) == pytest.approx(exact, rel=1e-9)


@given(st.integers(2, 12), st.floats(0.2, 4.0))
def test_hyperbolic_radial_on_cosh(d, delta):
    assert apply_hyperbolic_radial(d, math.cosh, delta) == pytest.approx(d * math.cosh(delta), rel=1e-9)


@pytest.mark.parametrize("n", [1, 2])
def test_change_of_variable(n):
    g = lambda x: math.exp(-x * x / 2)
    for at in [(0.3, 0.2), (1.0, 1.0), (2.0, 2.2)]:
        assert change_of_variable_residual(n, g, at, StencilSpec(h=1e-2)) < 1e-5
    assert change_of_variable_residual(1, lambda x: 0.0, (1.0, 1.0)) == 0.0
    with pytest.raises(ValueError):
        change_of_variable_residual(1, g, (0.0, 1.0))


def test_time_derivative():
    assert time_derivative(lambda s: math.exp(-2 * s), 0.5) == pytest.approx(-2 * math.exp(-1), rel=1e-12)


def test_step_rules():
    assert default_step(0.5, 2.0) == pytest.approx(5e-3)
    assert default_step(1e-5) == 1e-3
    with pytest.raises(ValueError):
        apply_radial_sublaplacian(1, lambda a, b: 1.0, (0.01, 1.0), StencilSpec(h=0.01))
    with pytest.raises(ValueError):
        StencilSpec(h=-1.0)
    with pytest.raises(ValueError):
        StencilSpec(levels=-1)


def test_residual_suite_on_kernel():
    def k(s, r, eta):
        return float(ads_kernel(EvalContext(1, s), KernelPoint(r, eta)).value)

    st_ = pde_residual_suite(1, 0.5, k, "radial-L", [(0.8, 0.9), (1.6, 2.2)])
    assert st_.count == 2 and st_.max < 1e-3
    assert st_.worst_point in [(0.8, 0.9), (1.6, 2.2)]
    # the d'Alembertian is not the heat operator of p_t
    bad = pde_residual_suite(1, 0.5, k, "dalembertian", [(0.8, 0.9)])
    assert bad.max > 1e-2
    empty = pde_residual_suite(1, 0.5, k, "radial-L", [])
    assert empty.count == 0
    with pytest.raises(ValueError):
        pde_residual_suite(1, 0.5, k, "laplacian", [])

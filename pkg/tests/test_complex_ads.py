import math

import pytest

from qadsheat.ads import EvalContext, KernelPoint, ads_kernel
from qadsheat.complex_ads import branch_policy, cads_kernel, relation_lhs, relation_residual

# 30-digit mpmath: q_{t,5} from the closed form q_{t,3} by one delta-derivative,
# k-terms |k| <= 3 of the shifted real-line integral
CADS_ORACLE = {
    (0.5, 1.0, 0.5): 6.024852174949918227801e-4,
    (1.0, 1.5, 1.0): 6.650834026774455737131e-6,
    (0.3, 2.0, 0.2): 1.033081217680146823709e-4,
}


@pytest.mark.parametrize("key", sorted(CADS_ORACLE))
@pytest.mark.parametrize("method", ["principal", "shifted"])
def test_oracle(key, method):
    t, r, eta = key
    v = cads_kernel(EvalContext(1, t), r, eta, method)
    assert float(v.value) == pytest.approx(CADS_ORACLE[key], rel=1e-12)
    assert not v.flags


def test_branch_policy():
    assert branch_policy(1.0, 0.5).cut_safe
    assert not branch_policy(0.5, 1.2).cut_safe
    assert branch_policy(1.0, 0.5).margin == pytest.approx(math.cosh(1) * math.cos(0.5) - 1)


def test_outside_cut_safe_region_is_flagged():
    ctx = EvalContext(1, 0.5)
    v = cads_kernel(ctx, 0.5, 1.2, "principal")
    assert "branch-cut" in v.flags
    w = cads_kernel(ctx, 0.5, 1.2, "shifted")
    assert "branch-cut" not in w.flags and w.value.sign > 0


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("r,eta", [(1.0, 0.2), (1.5, 0.8), (2.0, 0.5)])
def test_derivative_relation(n, r, eta):
    assert relation_residual(EvalContext(n, 0.5), r, eta) < 1e-6


def test_relation_with_shifted_form_outside_cut_safe_region():
    ctx = EvalContext(1, 0.5)
    lhs, flags = relation_lhs(ctx, 0.5, 1.5, "shifted")
    p = float(ads_kernel(ctx, KernelPoint(0.5, 1.5)).value)
    assert lhs == pytest.approx(p, rel=1e-6)
    assert "branch-cut" not in flags


def test_invalid():
    ctx = EvalContext(1, 0.5)
    for eta in (0.0, math.pi):
        with pytest.raises(ValueError):
            cads_kernel(ctx, 1.0, eta)
    with pytest.raises(ValueError):
        cads_kernel(ctx, -1.0, 0.5)
    with pytest.raises(ValueError):
        cads_kernel(ctx, 1.0, 0.5, "other")

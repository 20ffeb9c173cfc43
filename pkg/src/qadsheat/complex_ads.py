"""Horizontal heat kernel of the complex anti-de Sitter space of dimension 4n+1.

    p^C_t(r, eta) = (4 pi t)^{-1/2} sum_k int_R e^{y^2/4t} q_{t,4n+1}(cosh r cosh(y + i theta_k)) dy,
    theta_k = eta + 2 k pi.

The argument cosh(y + i theta_k) does not depend on k; the k-th term is the
continuation of q along theta in [0, theta_k].  Shifting y -> y - i theta_k
puts every term on the real line:

    term_k = e^{-theta_k^2/4t} 2 int_0^inf e^{y^2/4t} cos(theta_k y/2t) q_{t,4n+1}(cosh r cosh y) dy.

For k = 0 the continuation stays on the principal arccosh branch exactly when
cosh r cos eta > 1 (the cut-safe region), where the unshifted integral can
be evaluated directly on the principal branch.

The derivative relation with the quaternionic kernel is

    p_t(r, eta) = -e^{-4nt} / (2 pi cosh r sin eta) * d/d eta p^C_t(r, eta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ads import (
    EvalContext,
    KernelPoint,
    KernelValue,
    _contour_height,
    _log_E_complex,
    _theta_line_integral,
    ads_kernel_theta,
)
from .logspace import MantissaExponent, signed_logsumexp
from .quadrature import QuadratureError, QuadratureSpec, integrate_finite_vec

__all__ = ["BranchPolicy", "branch_policy", "cads_kernel", "relation_lhs", "relation_residual"]


@dataclass(frozen=True)
class BranchPolicy:
    """Where the principal-branch evaluation of the k = 0 term is trustworthy."""

    cut_safe: bool
    margin: float  # cosh r cos eta - 1
    mode: str = "principal"


def branch_policy(r: float, eta: float) -> BranchPolicy:
    m = math.cosh(r) * math.cos(eta) - 1.0
    return BranchPolicy(m > 0, m)


def _check(ctx, r, eta):
    if not r >= 0:
        raise ValueError("r must be >= 0")
    if not 0 < eta < math.pi:
        raise ValueError("eta must lie in (0, pi)")


def _principal_k0(ctx: EvalContext, r: float, eta: float, rel_tol: float):
    """int_R e^{y^2/4t} q(cosh r cosh(y + i eta)) dy on the principal branch.

    Returns (real part as sign/log, |imag|/|real|, rel_err, nodes).  The two
    half-lines are integrated separately so the imaginary part is a genuine
    diagnostic of conjugate symmetry rather than zero by construction.
    """
    n, t = ctx.n, ctx.t
    d = 4 * n + 1

    def comps(y):
        y = np.asarray(y, dtype=float)
        out_s, out_l = [], []
        for sgn in (1.0, -1.0):
            z = sgn * y + 1j * eta
            # y^2/4t - delta^2/4t with the y^2 part folded into _log_E_complex at
            # the complex point z: shift the Gaussian from z^2 back to y^2
            with np.errstate(all="ignore"):
                L = _log_E_complex(n, t, r, z, d) + (y * y - z * z) / (4 * t)
            for part in (np.cos(L.imag), np.sin(L.imag)):
                out_s.append(np.sign(part))
                with np.errstate(divide="ignore"):
                    out_l.append(L.real + np.log(np.abs(part)))
        return np.array(out_s), np.array(out_l)

    rate = max(2 * n, 0.5) + (math.log(math.cosh(r)) / (2 * t) if r > 0 else 0.0)
    U = (40 * math.log(10) + 60) / rate + 4.0
    omega = eta / (2 * t)
    step = max(min(math.pi / max(omega, 1e-9) / 2, math.sqrt(t), 1.0), 1e-3)
    bps = list(np.arange(step, U, step))
    s, l, rel, absl, nodes, ok = integrate_finite_vec(comps, 0.0, U, QuadratureSpec(rel_tol=rel_tol, max_subdivisions=40000), bps)
    if not ok:
        raise QuadratureError(f"principal-branch integral (n={n}, t={t}, r={r}, eta={eta}) did not converge")
    re_s, re_l = signed_logsumexp(s[[0, 2]], l[[0, 2]])
    im_s, im_l = signed_logsumexp(s[[1, 3]], l[[1, 3]])
    imag_rel = math.exp(im_l - re_l) if im_s != 0 else 0.0
    # the imaginary parts cancel; their size sets the absolute rounding level
    scale = np.max(absl) - re_l
    err = float(np.max(rel[[0, 2]] * np.exp(l[[0, 2]] - re_l))) + 1e-16 * math.exp(scale)
    return re_s, re_l, imag_rel, err, nodes


def cads_kernel(ctx: EvalContext, r: float, eta: float, method: str = "principal") -> KernelValue:
    """p^C_t(r, eta).

    method 'principal': the k = 0 term on the principal arccosh branch (flagged
    'branch-cut' outside the cut-safe region), k != 0 in shifted form;
    method 'shifted': every term in the shifted real-line form, evaluated
    on the line through the saddle of its exponent.
    """
    _check(ctx, r, eta)
    if method not in ("principal", "shifted"):
        raise ValueError("method must be 'principal' or 'shifted'")
    n, t = ctx.n, ctx.t
    d = 4 * n + 1
    rel_tol = min(ctx.quad.rel_tol, ctx.rel_tol * 1e-2)
    pol = branch_policy(r, eta)
    flags = []
    parts_s, parts_l, parts_e = [], [], []
    nodes = terms = 0
    imag_rel = 0.0
    K = 0
    ks = [0]
    while True:
        for k in ks:
            th = eta + 2 * math.pi * k
            if k == 0 and method == "principal":
                s, l, imag_rel, e, nd = _principal_k0(ctx, r, eta, rel_tol)
                if not pol.cut_safe:
                    flags.append("branch-cut")
                if imag_rel > 1e-10:
                    flags.append("imaginary-part")
            else:
                c = _contour_height(r, th) if r > 0 else 0.0
                s, l, e, _, nd = _theta_line_integral(n, t, r, th, c, rel_tol, d=d, kind="cos")
                l += math.log(2.0)
            nodes += nd
            terms += 1
            if s != 0:
                parts_s.append(s)
                parts_l.append(l)
                parts_e.append(e)
        tot_s, tot_l = signed_logsumexp(parts_s, parts_l)
        # next pair bounded through the k = 0 magnitude and the Gaussian ratio
        g = 2 * math.pi * (K + 1) - eta
        bound = math.log(2) + max(parts_l) + (eta * eta - g * g) / (4 * t) + math.log(4.0)
        if bound - tot_l < math.log(rel_tol) - 2:
            break
        K += 1
        ks = [K, -K]
        if K > 50:
            flags.append("k-sum-not-converged")
            break
    l = tot_l - 0.5 * math.log(4 * math.pi * t)
    err = sum(e * math.exp(pl - tot_l) for e, pl in zip(parts_e, parts_l))
    if err > ctx.rel_tol:
        flags.append("tolerance-not-met")
    return KernelValue(MantissaExponent.from_log(tot_s, l), err, terms, nodes, 16, "cads-" + method,
                       tuple(dict.fromkeys(flags)))


def _richardson_derivative(f, x, h, levels=2):
    """Central difference with `levels` Richardson eliminations (order 2 + 2 levels)."""
    table = []
    for j in range(levels + 1):
        hj = h / 2 ** j
        table.append((f(x + hj) - f(x - hj)) / (2 * hj))
    for lev in range(1, levels + 1):
        fac = 4 ** lev
        table = [(fac * table[i + 1] - table[i]) / (fac - 1) for i in range(len(table) - 1)]
    return table[0]


def relation_lhs(ctx: EvalContext, r: float, eta: float, method: str = "principal", h: float | None = None):
    """-e^{-4nt}/(2 pi cosh r sin eta) d/d eta p^C_t(r, eta), with the flags met on the way."""
    _check(ctx, r, eta)
    if h is None:
        h = min(0.05, eta / 4, (math.pi - eta) / 4)
    flags = set()

    def f(e):
        v = cads_kernel(ctx, r, e, method)
        flags.update(v.flags)
        return float(v.value)

    deriv = _richardson_derivative(f, eta, h)
    return -math.exp(-4 * ctx.n * ctx.t) / (2 * math.pi * math.cosh(r) * math.sin(eta)) * deriv, tuple(sorted(flags))


def relation_residual(ctx: EvalContext, r: float, eta: float, method: str = "principal") -> float:
    """|LHS - p_t(r, eta)| / p_t(r, eta) for the derivative relation."""
    lhs, _ = relation_lhs(ctx, r, eta, method)
    p = float(ads_kernel_theta(ctx, KernelPoint(r, eta)).value)
    return abs(lhs - p) / abs(p)

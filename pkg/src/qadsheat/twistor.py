"""Subelliptic heat kernel h_t(r, phi) on the twistor space (the CP^1 bundle over HH^n).

Two forms are provided.

'fibration' (default): the S^1 quotient of the AdS kernel keeps only the even
SU(2) modes, U_{2j}(cos eta) -> P_j(cos 2 phi), so with the AdS spectral
coefficients f_m(t, r)

    h_t(r, phi) = (pi/2) sum_j f_{2j}(t, r) P_j(cos 2 phi)
                = sum_j e^{-4j(j+1)t} P_j(cos 2phi) int_0^inf sinh u sinh((2j+1)u) q_{t,4n+3}(cosh r cosh u) du.

This solves d_t h = [D_r + tanh^2 r D_phi] h term by term.

'literal': int_0^inf sinh^2 u [sum_m (2m+1) e^{-4m(m+1)t} P_m(cos 2phi) P_m(cosh 2u)]
           q_{t,4n+3}(cosh r cosh u) du.

Both share the m = 0 term and hence the mass; only the fibration form
satisfies the heat equation (see the tests).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from .ads import (
    EvalContext,
    KernelValue,
    _coefficients_mp,
    _ladder_digits,
    _log_E,
    ads_measure,
    spectral_coefficients,
)
from .fibers import cp1_kernel_continued, cp1_m_max
from .logspace import MantissaExponent, log_sinh, signed_logsumexp
from .quadrature import QuadratureSpec, integrate_finite, logconcave_tail_log
from .special import legendre_P_all

__all__ = ["TwistorPoint", "twistor_kernel", "twistor_mass", "twistor_pde_residual"]

LOG10 = math.log(10.0)


@dataclass(frozen=True)
class TwistorPoint:
    r: float
    phi: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError("r must be >= 0")
        if not 0 <= self.phi <= math.pi / 2:
            raise ValueError("phi must lie in [0, pi/2]")


def _fibration(ctx: EvalContext, p: TwistorPoint) -> KernelValue:
    n, t = ctx.n, ctx.t
    co = spectral_coefficients(n, t, p.r)
    lf = np.array(co.logf[0::2])
    J = lf.size - 1
    pj = legendre_P_all(J, math.cos(2 * p.phi))
    with np.errstate(divide="ignore"):
        L = lf + np.log(np.abs(pj))
    s, l = signed_logsumexp(np.sign(pj), L)
    _, labs = signed_logsumexp(np.abs(np.sign(pj)), L)
    loss = labs - l if s != 0 else math.inf
    err = math.exp(min(loss, 700)) * (co.rel_err + 64 * np.finfo(float).eps) + (
        math.exp(co.tail_log - l) if s != 0 else math.inf)
    flags = ()
    digits = 16
    nodes, terms = co.nodes, J + 1
    if err > ctx.rel_tol and ctx.precision != "double":
        # cancellation near phi = pi/2: redo the sum with high-precision coefficients
        target = -math.log10(ctx.rel_tol)
        digits = _ladder_digits(math.pi ** 2 / (4 * t), loss if s > 0 and err < 1e-2 else 0.0, target)
        for _ in range(4):
            w = np.array(co.logf) + np.log(np.arange(1, co.m_max + 2))
            slope = min(w[-1] - w[-2], -1e-3)
            need = float(np.max(w)) - (digits + 2) * LOG10
            M = co.m_max + max(0, int(math.ceil((w[-1] - need) / -slope))) + 4
            cm = _coefficients_mp(n, t, p.r, M, digits)
            val, err = _legendre_sum_mp(cm, p.phi)
            if err <= ctx.rel_tol:
                break
            digits += 10
        s = 1.0 if val > 0 else -1.0
        l = float(gmpy2.log(abs(val)))
        nodes, terms = cm.nodes, cm.m_max // 2 + 1
    if err > ctx.rel_tol:
        flags = ("tolerance-not-met",)
    l += math.log(math.pi / 2)
    return KernelValue(MantissaExponent.from_log(s, l), err, terms, nodes, digits, "twistor-fibration", flags)


def _legendre_sum_mp(cm, phi):
    ctx = gmpy2.get_context().copy()
    ctx.precision = int((cm.digits + 12) * 3.33) + 16
    with gmpy2.context(ctx):
        x = gmpy2.cos(2 * gmpy2.mpfr(phi))
        f = cm.exact[0::2]
        p0, p1 = gmpy2.mpfr(1), x
        acc = f[0]
        absacc = abs(f[0])
        for j in range(1, len(f)):
            term = f[j] * p1
            acc += term
            absacc += abs(term)
            p0, p1 = p1, ((2 * j + 1) * x * p1 - j * p0) / (j + 1)
        last = f[-1]
        rho = last / f[-2]
        tail = last * rho / (1 - rho) if rho < 1 else gmpy2.inf()
        rel = float((absacc * (cm.rel_err + gmpy2.mpfr(10) ** (-cm.digits)) + tail) / abs(acc)) if acc != 0 else math.inf
    return acc, rel


def _literal(ctx: EvalContext, p: TwistorPoint) -> KernelValue:
    n, t, r = ctx.n, ctx.t, p.r
    # cutoff: the integrand decays like e^{-2n u} times the CP^1 series growth
    # e^{u^2/4t}, which the q Gaussian e^{-(delta'^2)/4t} cancels
    rate = max(2 * n, 0.5) + (math.log(math.cosh(r)) / (2 * t) if r > 0 else 0.0)
    U = (40 * LOG10 + 60) / rate + 4.0
    trunc = cp1_m_max(t, U, 1e-17)

    def logf(u, phi=p.phi):
        u = np.asarray(u, dtype=float)
        s, l = cp1_kernel_continued(t, phi, u, trunc, log=True)
        with np.errstate(divide="ignore"):
            L = 2 * log_sinh(u) + l - u * u / (4 * t) + _log_E(n, t, r, u)
        return np.where(u > 0, s, 0.0), L

    step = max(min(1.0, math.sqrt(t)), 0.05)
    res = integrate_finite(logf, 0.0, U, QuadratureSpec(rel_tol=1e-13, max_subdivisions=20000),
                           list(np.arange(step, U, step)))
    # |P_m(cos 2phi)| <= 1, so the phi = 0 integrand is a positive majorant
    tail = logconcave_tail_log(lambda x: float(logf(np.array([x]), 0.0)[1][0]), U)
    err = res.error_estimate + math.exp(min(tail - res.value.log, 0.0)) + 1e-16 * res.loss
    flags = ("tolerance-not-met",) if err > ctx.rel_tol else ()
    return KernelValue(res.value, err, trunc.m_max + 1, res.nodes_used, 16, "twistor-literal", flags)


def twistor_kernel(ctx: EvalContext, p: TwistorPoint, form: str = "fibration") -> KernelValue:
    if form == "fibration":
        return _fibration(ctx, p)
    if form == "literal":
        return _literal(ctx, p)
    raise ValueError("form must be 'fibration' or 'literal'")


def twistor_mass(ctx: EvalContext, form: str = "fibration", rel_tol: float = 1e-10) -> float:
    """C_n int int h_t sinh^{4n-1} r cosh^3 r sin 2phi dr dphi over r >= 0, phi in [0, pi/2]."""
    n, t = ctx.n, ctx.t
    const = ads_measure(n).constant

    def phi_integrand(r):
        if form == "fibration":
            co = spectral_coefficients(n, t, r)
            f = np.exp(np.array(co.logf[0::2])) * (math.pi / 2)
            J = f.size - 1
            return lambda ph: float(f @ legendre_P_all(J, math.cos(2 * ph)))
        return lambda ph: float(twistor_kernel(ctx, TwistorPoint(r, ph), form).value)

    def fiber_integral(r):
        h = phi_integrand(r)
        g = lambda phis: np.array([h(ph) * math.sin(2 * ph) for ph in phis])
        return float(integrate_finite(g, 0.0, math.pi / 2, QuadratureSpec(rel_tol=1e-13)).value)

    def logF(r):
        return math.log(fiber_integral(r)) + (4 * n - 1) * math.log(math.sinh(r)) + 3 * math.log(math.cosh(r))

    def f(rs):
        return np.array([math.exp(logF(r)) if r > 0 else 0.0 for r in rs])

    U = 2.0 + 4 * math.sqrt(t) + 8 * n * t
    while logconcave_tail_log(logF, U) > math.log(rel_tol / 10):
        U += 1.0 + math.sqrt(t)
    res = integrate_finite(f, 0.0, U, QuadratureSpec(rel_tol=rel_tol), list(np.linspace(0, U, 8)[1:-1]))
    return const * float(res.value)


def twistor_pde_residual(ctx: EvalContext, grid, form: str = "fibration", stencil=None):
    """Heat-equation residual statistics of h_t against the twistor sub-Laplacian."""
    from .operators import StencilSpec, pde_residual_suite

    def k(t, r, phi):
        return float(twistor_kernel(EvalContext(ctx.n, t, quad=ctx.quad, rel_tol=ctx.rel_tol), TwistorPoint(r, phi), form).value)

    return pde_residual_suite(ctx.n, ctx.t, k, "twistor", grid, stencil or StencilSpec())

"""Subelliptic heat kernel p_t(r, eta) of the quaternionic anti-de Sitter fibration.

With d = 4n + 3, q = q_{t,d} and delta'(y) = arccosh(cosh r cosh y):

spectral form
    p = (2/pi) int_0^inf (sinh u / sin eta) sum_m e^{-m(m+2)t}
        sin((m+1)eta) sinh((m+1)u) q(cosh delta'(u)) du
      = sum_m f_m(t, r) U_m(cos eta),
    f_m = (2/pi) e^{-m(m+2)t} int_0^inf sinh u sinh((m+1)u) q du  (all positive)

theta form
    p = e^t/sqrt(pi t) sum_k int_0^inf (sinh y sin(theta_k y/2t)/sin eta)
        e^{(y^2 - theta_k^2)/4t} q(cosh delta'(y)) dy,   theta_k = eta + 2 k pi.

The spectral coefficients are computed once per (n, t, r) on shared nodes
and reused for every eta.  When the sum over m cancels beyond what doubles
hold (small t, eta far from 0) the coefficients are recomputed with gmpy2
at a precision derived from the measured cancellation.

For r > 0 each theta integral is evaluated on the line Im y = c_k through
the saddle of its exponent, where the integrand no longer oscillates
against an exponentially small result.  At r = 0 the integrand
sinh y * e^{y^2/4t} q(cosh y) is meromorphic and each theta integral is a
sum of residues at y = i pi j, which gives the vertical-axis kernel in
closed form down to very small t.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import gmpy2
import numpy as np

from .fibers import SeriesTruncation
from .hyperbolic import (
    build_q_termsum,
    q_log,
    termsum_complex_log,
    termsum_log,
    _sinhc_power_series,
    _cosh_series,
)
from .logspace import MantissaExponent, log_cosh, log_sinh, signed_logsumexp
from .phase import gd, phase_residual, solve_phase
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    integrate_finite,
    integrate_finite_vec,
    _gl_nodes,
    logconcave_tail_log,
)
from .special import chebyshev_U_all

__all__ = [
    "EvalContext",
    "KernelPoint",
    "KernelValue",
    "RadialMeasure",
    "ads_measure",
    "SpectralCoefficients",
    "spectral_coefficients",
    "ads_kernel_spectral",
    "ads_kernel_theta",
    "ads_kernel",
    "ads_kernel_origin_fiber",
    "ads_mass",
    "acosh_cc",
    "dprime_minus_y",
]

LOG10 = math.log(10.0)


@dataclass(frozen=True)
class EvalContext:
    """Parameters threaded through every kernel evaluation.

    ``rel_tol`` is the target relative accuracy of returned kernel values;
    ``precision`` is 'auto' (escalate to mpmath when doubles cannot reach
    rel_tol), 'double' or 'mp'.
    """

    n: int
    t: float
    trunc: SeriesTruncation | None = None
    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(rel_tol=1e-13))
    rel_tol: float = 1e-10
    precision: str = "auto"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")
        if not self.t > 0:
            raise ValueError("t must be positive")
        if self.precision not in ("auto", "double", "mp"):
            raise ValueError("precision must be auto, double or mp")

    @property
    def dim(self) -> int:
        return 4 * self.n + 3


@dataclass(frozen=True)
class KernelPoint:
    r: float
    eta: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError("r must be >= 0")
        if not 0 <= self.eta < math.pi:
            raise ValueError("eta must lie in [0, pi)")


@dataclass(frozen=True)
class KernelValue:
    """Kernel value with relative error estimate and diagnostics."""

    value: MantissaExponent
    error_estimate: float
    terms: int = 0
    nodes: int = 0
    digits: int = 16
    method: str = ""
    flags: tuple = ()

    @property
    def log(self) -> float:
        return self.value.log

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class RadialMeasure:
    constant: float
    density: Callable

    def log_density(self, r, x):
        return np.log(self.density(r, x))


def ads_measure(n: int) -> RadialMeasure:
    """C_n sinh^{4n-1} r cosh^3 r sin^2 eta, C_n = 8 pi^{2n+1}/Gamma(2n)."""
    const = 8 * math.pi ** (2 * n + 1) / math.gamma(2 * n)
    return RadialMeasure(const, lambda r, eta: np.sinh(r) ** (4 * n - 1) * np.cosh(r) ** 3 * np.sin(eta) ** 2)


# ---------------------------------------------------------------------------
# geometry


def acosh_cc(r: float, y):
    """arccosh(cosh r cosh y) without cancellation near the origin or overflow."""
    y = np.asarray(y, dtype=float)
    big = (r + np.abs(y)) > 300
    ys = np.where(big, 0.0, y)
    s = np.sinh(0.5 * r) ** 2 * np.cosh(ys) + np.sinh(0.5 * ys) ** 2
    small = 2.0 * np.arcsinh(np.sqrt(s))
    x = log_cosh(r) + log_cosh(y)  # log of the argument
    large = x + np.log1p(np.sqrt(-np.expm1(-2 * x)))
    return np.where(big, large, small)


def dprime_minus_y(r: float, y, dp=None):
    """delta'(y) - y via sinh((delta'-y)/2) = sinh^2(r/2) cosh y / sinh((delta'+y)/2)."""
    y = np.asarray(y, dtype=float)
    if dp is None:
        dp = acosh_cc(r, y)
    if r == 0:
        return np.zeros_like(y)
    with np.errstate(divide="ignore"):
        ratio = np.exp(2 * math.log(math.sinh(0.5 * r)) + log_cosh(y) - log_sinh(0.5 * (dp + y)))
    return 2.0 * np.arcsinh(ratio)


def _log_E(n: int, t: float, r: float, y, d: int | None = None):
    """log of e^{y^2/4t} q_{t,d}(cosh delta'(y)), computed without forming either Gaussian."""
    d = 4 * n + 3 if d is None else d
    ts = build_q_termsum(d)
    dp = acosh_cc(r, y)
    _, ls = termsum_log(ts, t, dp)
    diff = dprime_minus_y(r, y, dp)
    return ts.log_prefactor(t) + ls - diff * (dp + y) / (4 * t)


def _log_E_complex(n: int, t: float, r: float, y, d: int | None = None):
    """Complex log of e^{y^2/4t} q_{t,d}(cosh delta'(y)) for complex y (principal arccosh)."""
    d = 4 * n + 3 if d is None else d
    ts = build_q_termsum(d)
    y = np.asarray(y, dtype=complex)
    s = np.sinh(0.5 * r) ** 2 * np.cosh(y) + np.sinh(0.5 * y) ** 2
    dp = 2.0 * np.arcsinh(np.sqrt(s))
    dp = np.where(dp.real < 0, -dp, dp)
    ls = termsum_complex_log(ts, t, dp)
    # (y^2 - delta'^2) from delta' - y when the two are close
    direct = (y - dp) * (y + dp)
    if r > 0:
        with np.errstate(all="ignore"):
            ratio = math.sinh(0.5 * r) ** 2 * np.cosh(y) / np.sinh(0.5 * (dp + y))
            diff = 2.0 * np.arcsinh(ratio)
            alt = -diff * (dp + y)
        use = np.isfinite(alt) & (np.abs(alt - direct) < 1e-6 * (1.0 + np.abs(direct)))
        direct = np.where(use, alt, direct)
    return ts.log_prefactor(t) + ls + direct / (4 * t)


# ---------------------------------------------------------------------------
# spectral coefficients


@dataclass(frozen=True)
class SpectralCoefficients:
    """f_m(t, r) for m = 0..m_max, in log form (all coefficients are positive)."""

    n: int
    t: float
    r: float
    logf: tuple  # floats, or mpf when digits > 16
    rel_err: float
    tail_log: float
    nodes: int
    digits: int
    cutoff: float
    exact: tuple | None = None  # gmpy2 values for the high-precision sets

    @property
    def m_max(self) -> int:
        return len(self.logf) - 1


def _peak_cutoff(n, t, r, M, digits):
    """Upper u limit: beyond the Gaussian peak of the highest component by a wide margin."""
    width = math.sqrt(4 * t * (digits * LOG10 + 40))
    return max(2 * t * (M + 2) + width + 2.0, 6.0 * math.sqrt(t) + 2.0)


def _coeff_log_integrand(n, t, r, M):
    m = np.arange(M + 1, dtype=float)[:, None]
    logw = math.log(2 / math.pi) - m * (m + 2) * t

    def f(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            lq = q_log(4 * n + 3, t, acosh_cc(r, u))
            L = logw + log_sinh(u)[None, :] + log_sinh((m + 1) * u[None, :]) + lq[None, :]
        s = np.where(u[None, :] > 0, 1.0, 0.0) * np.ones_like(L)
        return s, L

    return f


_coeff_lock = threading.Lock()
_coeff_cache: dict = {}


def _coefficients_double(n, t, r, M, rel_tol):
    f = _coeff_log_integrand(n, t, r, M)
    U = _peak_cutoff(n, t, r, M, 17)
    h = min(1.0, math.sqrt(2 * t))
    bps = list(np.arange(h, U, h))
    spec = QuadratureSpec(rel_tol=rel_tol, max_subdivisions=20000)
    s, l, rel, _, nodes, ok = integrate_finite_vec(f, 0.0, U, spec, bps)
    if not ok:
        raise QuadratureError(f"spectral coefficient integrals (n={n}, t={t}, r={r}) did not converge")
    # tail beyond U for every component, from log-concavity of the integrand
    tails = []
    for i in (0, M // 2, M):
        g = lambda x, i=i: float(f(np.array([x]))[1][i, 0])
        tails.append(logconcave_tail_log(g, U) - l[i])
    tail_rel = max(tails)
    if tail_rel > math.log(rel_tol):
        raise QuadratureError(f"cutoff {U} too small for spectral coefficients (n={n}, t={t}, r={r})")
    return l, float(np.max(rel)), nodes, U


def spectral_coefficients(n: int, t: float, r: float, rel_tol: float = 1e-13, drop: float = 40.0) -> SpectralCoefficients:
    """Double-precision f_m with m_max grown until f_m (m+1) falls e^-drop below the largest."""
    key = (n, float(t), float(r), rel_tol, drop, 16)
    with _coeff_lock:
        if key in _coeff_cache:
            return _coeff_cache[key]
    M = max(12, int(math.ceil((drop + 6) / (4 * n * t))) + 8)
    while True:
        l, rel, nodes, U = _coefficients_double(n, t, r, M, rel_tol)
        w = l + np.log(np.arange(1, M + 2))
        top = float(np.max(w))
        if w[-1] < top - drop and w[-1] < w[-2]:
            break
        M = int(M * 1.5) + 4
        if M > 20000:
            raise QuadratureError("spectral series does not decay")
    # geometric tail from the last ratio (ratios decrease toward e^{-4nt})
    rho = math.exp(w[-1] - w[-2])
    tail = w[-1] + math.log(rho / (1 - rho))
    out = SpectralCoefficients(n, float(t), float(r), tuple(float(x) for x in l), rel, tail, nodes, 16, U)
    with _coeff_lock:
        _coeff_cache[key] = out
    return out


def _mpf_to_gmpy(x):
    """Exact conversion of an mpmath mpf to gmpy2.mpfr."""
    sign, man, exp, _ = x._mpf_
    v = gmpy2.mul_2exp(gmpy2.mpfr(int(man), max(int(man).bit_length(), 2)), exp)
    return -v if sign else v


class _MPQ:
    """q_{t,d}(cosh delta) and sinh/cosh helpers in gmpy2 at a fixed bit precision."""

    def __init__(self, n, t, bits):
        ts = build_q_termsum(4 * n + 3)
        self.bits = bits
        with gmpy2.context(gmpy2.get_context(), precision=bits + 64):
            self.t = gmpy2.mpfr(t)
            m = ts.half_dim
            pi = gmpy2.const_pi()
            self.pref = gmpy2.exp(-m * m * self.t) / ((2 * pi) ** m * gmpy2.sqrt(4 * pi * self.t))
            self.terms = [(gmpy2.mpfr(h.coeff.numerator) / h.coeff.denominator * self.t ** (-h.t_power),
                           h.delta_power, h.inv_sinh_power, h.cosh_power) for h in ts.terms]
            self.four_t = 4 * self.t
        self.bmax = max(h.inv_sinh_power for h in ts.terms)

    def __call__(self, delta):
        # closed form; below delta = 1 the terms cancel like delta^-bmax, add guard bits
        extra = 32
        if delta < 1:
            extra += int(self.bmax * (-gmpy2.log2(delta) + 1))
        with gmpy2.context(gmpy2.get_context(), precision=self.bits + extra):
            d = gmpy2.mpfr(delta)
            sh, ch = gmpy2.sinh(d), gmpy2.cosh(d)
            acc = gmpy2.mpfr(0)
            for k, a, b, c in self.terms:
                acc += k * d ** a / sh ** b * (ch if c else 1)
            return acc * self.pref * gmpy2.exp(-d * d / self.four_t)


def _coefficients_mp(n, t, r, M, digits):
    """f_m(t, r), m = 0..M, to `digits` significant digits each (gmpy2 arithmetic).

    All integrands are positive, so each f_m is obtained to relative accuracy
    by composite Gauss-Legendre with per-component panel bisection.
    """
    # keyed on the exact precision so a value never depends on evaluation order
    key = ("mp", n, float(t), float(r), int(digits))
    with _coeff_lock:
        hit = _coeff_cache.get(key)
    if hit is not None and hit.m_max >= M:
        return hit
    bits = int(math.ceil((digits + 12) * math.log2(10))) + 16
    ctx = gmpy2.get_context().copy()
    ctx.precision = bits
    with gmpy2.context(ctx):
        qf = _MPQ(n, t, bits)
        rr = gmpy2.mpfr(r)
        shr2 = gmpy2.sinh(rr / 2) ** 2
        xs, ws = _gl_nodes(40, digits + 12)
        xs = [_mpf_to_gmpy(x) for x in xs]
        ws = [_mpf_to_gmpy(w) for w in ws]
        ncomp = M + 1

        def comps(u):
            dp = 2 * gmpy2.asinh(gmpy2.sqrt(shr2 * gmpy2.cosh(u) + gmpy2.sinh(u / 2) ** 2))
            sh = gmpy2.sinh(u)
            base = sh * qf(dp)
            c2 = 2 * gmpy2.cosh(u)
            out = [None] * ncomp
            a, b = sh, gmpy2.sinh(2 * u)
            for m in range(ncomp):
                out[m] = base * a
                a, b = b, c2 * b - a
            return out

        nodes = [0]

        def rule(lo, hi):
            c, h = (lo + hi) / 2, (hi - lo) / 2
            acc = [gmpy2.mpfr(0)] * ncomp
            for x, w in zip(xs, ws):
                vals = comps(c + h * x)
                acc = [s + w * v for s, v in zip(acc, vals)]
            nodes[0] += len(xs)
            return [h * v for v in acc]

        U = _peak_cutoff(n, t, r, M, digits)
        step = max(min(2.0, 3 * math.sqrt(2 * t)), 0.05)
        edges = [gmpy2.mpfr(0)] + [gmpy2.mpfr(x) for x in np.arange(step, U, step)] + [gmpy2.mpfr(U)]
        panels = [(lo, hi, rule(lo, hi)) for lo, hi in zip(edges[:-1], edges[1:])]
        scale = [sum(p[2][i] for p in panels) for i in range(ncomp)]
        tol = gmpy2.mpfr(10) ** (-(digits + 2))
        width = gmpy2.mpfr(U)
        total = [gmpy2.mpfr(0)] * ncomp
        err = 0.0
        stack = panels[::-1]
        while stack:
            lo, hi, q = stack.pop()
            mid = (lo + hi) / 2
            ql, qr = rule(lo, mid), rule(mid, hi)
            share = tol * (hi - lo) / width
            worst = 0.0
            bad = False
            for i in range(ncomp):
                diff = abs(ql[i] + qr[i] - q[i])
                if diff > share * scale[i]:
                    bad = True
                    break
                worst = max(worst, float(diff / scale[i]))
            if bad:
                if len(stack) + nodes[0] // 40 > 40000:
                    raise QuadratureError(f"spectral coefficient integrals (n={n}, t={t}, r={r}) did not converge")
                stack.append((mid, hi, qr))
                stack.append((lo, mid, ql))
                continue
            total = [s + a + b for s, a, b in zip(total, ql, qr)]
            err += worst
        tt = gmpy2.mpfr(t)
        vals = tuple(2 / gmpy2.const_pi() * gmpy2.exp(-m * (m + 2) * tt) * total[m] for m in range(ncomp))
    # the integrand beyond U is below e^-(digits + 40 decimal digits) of the peak
    logf = tuple(float(gmpy2.log(v)) for v in vals)
    out = SpectralCoefficients(n, float(t), float(r), logf, err, -math.inf, nodes[0], digits, U, vals)
    with _coeff_lock:
        _coeff_cache[key] = out
    return out


def _spectral_sum_double(co: SpectralCoefficients, eta: float):
    M = co.m_max
    ue = chebyshev_U_all(M, math.cos(eta))
    with np.errstate(divide="ignore"):
        L = np.array(co.logf) + np.log(np.abs(ue))
    s, l = signed_logsumexp(np.sign(ue), L)
    _, labs = signed_logsumexp(np.abs(np.sign(ue)), L)
    return s, l, labs


def _theta_loss_guess(t, r, eta):
    """Rough log of (absolute sum)/(value) for choosing a working precision."""
    return (2 * math.pi * eta + eta * eta) / (4 * t)


def _ladder_digits(base_loss: float, loss: float, target: float) -> int:
    """Working digits from a fixed ladder D0, D0+10, ... so nearby points share one set."""
    d0 = int(math.ceil(base_loss / LOG10 + target + 6))
    need = loss / LOG10 + target + 6
    return d0 + 10 * max(0, int(math.ceil((need - d0) / 10)))


def ads_kernel_spectral(ctx: EvalContext, p: KernelPoint) -> KernelValue:
    """Spectral representation: sum of f_m(t,r) U_m(cos eta) (U_m(1) = m+1 at eta = 0)."""
    n, t = ctx.n, ctx.t
    co = spectral_coefficients(n, t, p.r)
    s, l, labs = _spectral_sum_double(co, p.eta)
    loss = labs - l if s != 0 else math.inf
    M = co.m_max
    err_rel = math.exp(min(loss, 700)) * (co.rel_err + 64 * np.finfo(float).eps) + math.exp(co.tail_log + math.log(M + 2) - l) if s != 0 else math.inf
    if (err_rel <= ctx.rel_tol and ctx.precision != "mp") or ctx.precision == "double":
        flags = () if err_rel <= ctx.rel_tol else ("tolerance-not-met",)
        return KernelValue(MantissaExponent.from_log(s, l), err_rel, M + 1, co.nodes, 16, "spectral", flags)
    # high-precision branch: one coefficient set per (n, t, r), sized for the
    # worst eta in [0, pi) so that later points reuse it
    if not (s > 0 and err_rel < 1e-2):
        loss = max(loss, _theta_loss_guess(t, p.r, p.eta))
    target = -math.log10(ctx.rel_tol)
    digits = _ladder_digits(_theta_loss_guess(t, p.r, math.pi), loss, target)
    w = np.array(co.logf) + np.log(np.arange(1, M + 2))
    flags = ()
    for _ in range(4):
        # extend m until (m+1) f_m is 10^-(digits+2) below the largest term, by
        # extrapolating the (accelerating) decay of the double coefficients
        slope = min(w[-1] - w[-2], -1e-3)
        need = float(np.max(w)) - (digits + 2) * LOG10
        Mmp = M + max(0, int(math.ceil((w[-1] - need) / -slope))) + 4
        cm = _coefficients_mp(n, t, p.r, Mmp, digits)
        val, rel = _spectral_sum_mp(cm, p.eta)
        if rel <= ctx.rel_tol:
            break
        digits += 10
    else:
        flags = ("tolerance-not-met",)
    sign = 1.0 if val > 0 else -1.0
    return KernelValue(MantissaExponent.from_log(sign, float(gmpy2.log(abs(val)))), rel,
                       cm.m_max + 1, cm.nodes, cm.digits, "spectral-mp", flags)


def _spectral_sum_mp(cm: SpectralCoefficients, eta: float):
    """sum f_m U_m(cos eta) in gmpy2 with its relative error bound."""
    ctx = gmpy2.get_context().copy()
    ctx.precision = int((cm.digits + 12) * 3.33) + 16
    with gmpy2.context(ctx):
        ce = gmpy2.cos(gmpy2.mpfr(eta))
        u0, u1 = gmpy2.mpfr(1), 2 * ce
        acc = gmpy2.mpfr(0)
        absacc = gmpy2.mpfr(0)
        for m, fm in enumerate(cm.exact):
            um = u0 if m == 0 else u1
            if m >= 1:
                u0, u1 = u1, 2 * ce * u1 - u0
            term = fm * um
            acc += term
            absacc += abs(term)
        f = cm.exact
        M = len(f) - 1
        # tail after M: terms bounded by (m+1) f_m, geometric with the last ratio
        last = f[M] * (M + 1)
        rho = last / (f[M - 1] * M)
        tail = last * rho / (1 - rho) if rho < 1 else gmpy2.inf()
        if acc == 0:
            return acc, math.inf
        rel = float((absacc * (cm.rel_err + gmpy2.mpfr(10) ** (-cm.digits)) + tail) / abs(acc))
    return acc, rel


# ---------------------------------------------------------------------------
# theta representation


def _log_theta_prefactor(t):
    return t - 0.5 * math.log(math.pi * t)


def _envelope_integral(n, t, r, weight_y: bool, rel_tol=1e-10):
    """log int_0^inf sinh y e^{y^2/4t} q(cosh delta') [y/2t] dy (a positive majorant helper)."""

    def f(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            L = log_sinh(y) + _log_E(n, t, r, y)
            if weight_y:
                L = L + np.log(y / (2 * t))
        return np.where(y > 0, 1.0, 0.0), L

    U = _theta_cutoff(n, t, r, 0.0)
    res = integrate_finite(f, 0.0, U, QuadratureSpec(rel_tol=rel_tol, max_subdivisions=5000),
                           list(np.linspace(0, U, 24)[1:-1]))
    return res.value.log


def _theta_cutoff(n, t, r, c, digits=40):
    """x cutoff for the theta integrand: exponential decay rate ~ 2n + ln(cosh r)/(2t)."""
    rate = 2 * n + math.log(math.cosh(r)) / (2 * t) if r > 0 else 2 * n
    rate = max(rate, 0.5)
    return (digits * LOG10 + 60) / rate + 4.0


def _theta_line_integral(n, t, r, theta, c, rel_tol, d=None, kind="sin"):
    """Im int_0^inf g(x + i c) dx with g = sinh y e^{(y + i theta)^2/4t - y^2/4t} e^{y^2/4t} q.

    Equals e^{-theta^2/4t} int_0^inf sinh y sin(theta y/2t) e^{y^2/4t} q dy
    (the segment from 0 to ic is real and drops out of the imaginary part).
    With kind='cos' the sinh y factor is absent and the real part is taken,
    giving e^{-theta^2/4t} int_0^inf cos(theta y/2t) e^{y^2/4t} q dy (the
    integrand is even, so the shift is exact for the full line).
    Returns (sign, log, rel_err, loss, nodes).
    """
    sin_kind = kind == "sin"

    def logg(x):
        y = np.asarray(x, dtype=float) + 1j * c
        with np.errstate(all="ignore"):
            L = _log_E_complex(n, t, r, y, d) + (2j * theta * y - theta * theta) / (4 * t)
            if sin_kind:
                L = L + np.log(np.sinh(y))
        return L

    def f(x):
        L = logg(x)
        s = np.sin(L.imag) if sin_kind else np.cos(L.imag)
        with np.errstate(divide="ignore"):
            return np.sign(s), L.real + np.log(np.abs(s))

    U = _theta_cutoff(n, t, r, c)
    # panels: fine near x = 0 (peak, possibly close to the singularity), then
    # about a quarter period of the residual oscillation
    omega = abs(theta) / (2 * t)
    dist = abs(math.pi - gd(r) - abs(c)) if r > 0 else 1.0
    near = min(0.25, max(dist, 1e-6))
    step = max(min(math.pi / max(omega, 1e-9) / 2, math.sqrt(t), 1.0), 1e-3)
    bps = sorted(set([near / 8, near / 4, near / 2, near] + list(np.arange(near, U, step))))
    spec = QuadratureSpec(rel_tol=rel_tol, max_subdivisions=40000)
    s, l, rel, absl, nodes, ok = integrate_finite_vec(f, 0.0, U, spec, bps)
    if not ok:
        raise QuadratureError(f"theta integral (n={n}, t={t}, r={r}, theta={theta}) did not converge")
    # tail majorant beyond U from |g| (log-concave decay in x)
    tail = logconcave_tail_log(lambda x: float(logg(np.array([x])).real[0]), U)
    s, l, rel, absl = float(s[0]), float(l[0]), float(rel[0]), float(absl[0])
    if s != 0:
        rel += math.exp(min(tail - l, 0.0))
    return s, l, rel, absl - l if s != 0 else math.inf, nodes


def _theta_real_k_limit(n, t, r, theta, rel_tol):
    """eta -> 0 limit of the +-k pair: int sinh y E(y) d/dtheta[sin(theta y/2t) e^{-theta^2/4t}] dy."""

    def f(y):
        y = np.asarray(y, dtype=float)
        x = theta * y / (2 * t)
        v = (y / (2 * t)) * np.cos(x) - (theta / (2 * t)) * np.sin(x)
        with np.errstate(divide="ignore"):
            L = log_sinh(y) + _log_E(n, t, r, y) + np.log(np.abs(v)) - theta * theta / (4 * t)
        return np.where(y > 0, np.sign(v), 0.0), L

    U = _theta_cutoff(n, t, r, 0.0)
    omega = abs(theta) / (2 * t)
    step = max(min(math.pi / max(omega, 1e-9) / 2, 1.0), 1e-3)
    res = integrate_finite(f, 0.0, U, QuadratureSpec(rel_tol=rel_tol, max_subdivisions=40000),
                           list(np.arange(step, U, step)), strict=True)
    return res.value.sign, res.value.log, res.error_estimate, math.log(max(res.loss, 1.0)), res.nodes_used


def _contour_height(r, theta):
    """Im y of the saddle of exp[((y + i theta)^2 - delta'(y)^2)/4t]."""
    if theta == 0:
        return 0.0
    # for small r the saddle crowds the singularity at height pi - gd(r); any
    # lower line is equally exact and much easier to integrate on
    cap = math.pi - gd(r) - 0.1
    side = -math.copysign(cap, theta)
    if phase_residual(0.0, r, theta) * phase_residual(side, r, theta) > 0:
        return -side  # the saddle lies beyond the cap
    c = -solve_phase(r, theta).varphi
    return math.copysign(min(abs(c), cap), c)


# residues at r = 0 -----------------------------------------------------------


@lru_cache(maxsize=None)
def _residue_tables(n: int):
    """Per term of F(y) = sinh y * S(y): (coeff, p, a, b, c, sinhc^{1-b} series, cosh^c series)."""
    ts = build_q_termsum(4 * n + 3)
    rows = []
    for term in ts.terms:
        b1 = term.inv_sinh_power - 1  # F has sinh^{-(b-1)}
        order = max(0, term.inv_sinh_power)  # series up to z^(b-2) is enough
        sh = _sinhc_power_series(-b1, order)
        ch = _cosh_series(order) if term.cosh_power else None
        rows.append((term.coeff, term.t_power, term.delta_power, term.inv_sinh_power, term.cosh_power, sh, ch))
    return tuple(rows)


def _residue_sum_log(n: int, t: float, omega: float, rel_tol: float = 1e-17):
    """(sign, log) of pi * sum_j Res_{y = i pi j} [sinh y S(y) e^{i omega y}], omega > 0.

    This equals int_0^inf sinh y sin(omega y) S(y) dy (S the term sum without
    prefactor and Gaussian).
    """
    rows = _residue_tables(n)
    logt = math.log(t)
    signs, logs = [], []
    j = 1
    best = -math.inf
    while True:
        sj, lj = [], []
        for coeff, p, a, b, c, sh, ch in rows:
            order = b - 2
            if order < 0:
                continue
            # coefficient of z^order in (i pi j + z)^a * sinhc^{1-b} * cosh^c * e^{i omega z}
            A = np.array([math.comb(a, l) * (1j * math.pi * j) ** (a - l) if l <= a else 0j for l in range(order + 1)])
            B = np.array([float(sh[k // 2]) if k % 2 == 0 else 0.0 for k in range(order + 1)])
            if ch is not None:
                Cc = np.array([float(ch[k // 2]) if k % 2 == 0 else 0.0 for k in range(order + 1)])
                B = np.convolve(B, Cc)[: order + 1]
            E = np.array([(1j * omega) ** k / math.factorial(k) for k in range(order + 1)])
            coef = np.convolve(np.convolve(A, B)[: order + 1], E)[order]
            par = (-1) ** ((j * (1 - b + c)) % 2)
            val = float(coeff) * par * coef.real
            if val != 0:
                sj.append(math.copysign(1.0, val))
                lj.append(math.log(abs(val)) - p * logt - math.pi * j * omega)
        if lj:
            s, l = signed_logsumexp(sj, lj)
            if s != 0:
                signs.append(s)
                logs.append(l)
                best = max(best, l)
                if j > 1 and l < best + math.log(rel_tol) and len(logs) > 2 and logs[-1] < logs[-2]:
                    break
        j += 1
        if j > 100000:
            raise RuntimeError("residue series did not converge")
    s, l = signed_logsumexp(signs, logs)
    return s, l + math.log(math.pi), j


def _theta_k_terms(ctx: EvalContext, r: float, eta: float, rel_tol: float):
    """Evaluate the k-sum; returns (sign, log, rel_err, nodes, terms, flags)."""
    n, t = ctx.n, ctx.t
    ts = build_q_termsum(4 * n + 3)
    small = math.sin(eta) < 1e-8
    # envelope majorant for discarding k-terms
    env = _envelope_integral(n, t, r, False)
    env_y = _envelope_integral(n, t, r, True)
    parts_s, parts_l, parts_e = [], [], []
    nodes = 0
    terms = 0
    flags = []
    ks = [0]
    K = 0
    while True:
        for k in ks:
            th = eta + 2 * math.pi * k
            if small and k < 0:
                continue  # the -k partner is folded into k in the limit formula
            if small:
                if k == 0:
                    s, l, e, _, nd = _theta_real_k_limit(n, t, r, 0.0, rel_tol)
                else:
                    s1, l1, e1, _, nd1 = _theta_real_k_limit(n, t, r, th, rel_tol)
                    s2, l2, e2, _, nd2 = _theta_real_k_limit(n, t, r, -th, rel_tol)
                    s, l = signed_logsumexp([s1, s2], [l1, l2])
                    e = (e1 * math.exp(l1 - l) + e2 * math.exp(l2 - l)) if s != 0 else 0.0
                    nd = nd1 + nd2
            elif r == 0 and abs(th) / (2 * t) >= 0.5:
                s, l, _ = _residue_sum_log(n, t, abs(th) / (2 * t))
                s = s * math.copysign(1.0, th)
                l = l + ts.log_prefactor(t) - th * th / (4 * t)
                e, nd = 1e-14, 0
            else:
                c = _contour_height(r, th) if r > 0 else 0.0
                s, l, e, _, nd = _theta_line_integral(n, t, r, th, c, rel_tol)
            terms += 1
            nodes += nd
            if s != 0:
                parts_s.append(s)
                parts_l.append(l)
                parts_e.append(e)
        tot_s, tot_l = signed_logsumexp(parts_s, parts_l)
        # bound on all |k| > K (both signs), majorant e^{-theta^2/4t} (1 + |theta|/2t) * envelope
        bound = -math.inf
        for kk in range(K + 1, K + 60):
            g2 = 2 * math.pi * kk - eta
            lb = -(g2 * g2) / (4 * t) + (np.logaddexp(env_y, env + math.log(g2 / (2 * t))) if small else env)
            bound = np.logaddexp(bound, lb + math.log(2))
        if tot_s != 0 and bound - tot_l < math.log(rel_tol) - 2:
            break
        K += 1
        ks = [K, -K]
        if K > 50:
            flags.append("k-sum-not-converged")
            break
    with np.errstate(over="ignore"):
        err = sum(e * math.exp(l - tot_l) for e, l in zip(parts_e, parts_l)) + math.exp(bound - tot_l)
    return tot_s, tot_l, err, nodes, terms, tuple(flags), K


def ads_kernel_theta(ctx: EvalContext, p: KernelPoint) -> KernelValue:
    """Theta (k-sum) representation.

    r > 0: each k-integral on its saddle line; r = 0: residues (real-line
    quadrature when theta_k/2t < 1/2); eta = 0: the analytic limit formula.
    """
    t = ctx.t
    rel_tol = min(ctx.quad.rel_tol, ctx.rel_tol * 1e-2)
    s, l, err, nodes, terms, flags, K = _theta_k_terms(ctx, p.r, p.eta, rel_tol)
    l = l + _log_theta_prefactor(t)
    if math.sin(p.eta) >= 1e-8:
        l -= math.log(math.sin(p.eta))
    if err > ctx.rel_tol:
        flags = flags + ("tolerance-not-met",)
    return KernelValue(MantissaExponent.from_log(s, l), err, terms, nodes, 16, "theta", flags)


def ads_kernel(ctx: EvalContext, p: KernelPoint, method: str = "theta") -> KernelValue:
    if method == "theta":
        return ads_kernel_theta(ctx, p)
    if method == "spectral":
        return ads_kernel_spectral(ctx, p)
    raise ValueError("method must be 'theta' or 'spectral'")


def ads_kernel_origin_fiber(ctx: EvalContext, eta: float) -> KernelValue:
    """p_t(0, eta) from the residue expansion, in log space.

    Valid down to t ~ 1e-4 and below; small eta/2t falls back to quadrature.
    """
    if not 0 < eta < math.pi:
        raise ValueError("eta must lie in (0, pi)")
    return ads_kernel_theta(ctx, KernelPoint(0.0, eta))


# ---------------------------------------------------------------------------
# mass


def ads_mass(ctx: EvalContext, rel_tol: float = 1e-10) -> float:
    """int p_t dnu over r in [0, inf), eta in [0, pi] with the normalized measure.

    The eta-integral is done by adaptive quadrature of the spectral sum at each
    r node; the r-integral is adaptive with a log-concave tail bound.
    """
    n, t = ctx.n, ctx.t
    meas = ads_measure(n)

    def fiber_integral(r):
        co = spectral_coefficients(n, t, r)
        f = np.exp(np.array(co.logf))
        M = co.m_max

        def g(eta):
            ue = chebyshev_U_all(M, np.cos(eta))
            return (f @ ue) * np.sin(eta) ** 2

        return float(integrate_finite(g, 0.0, math.pi, QuadratureSpec(rel_tol=1e-13)).value)

    def logF(r):
        return math.log(fiber_integral(r)) + (4 * n - 1) * math.log(math.sinh(r)) + 3 * math.log(math.cosh(r))

    def f(rs):
        return np.array([math.exp(logF(r)) if r > 0 else 0.0 for r in rs])

    U = 2.0 + 4 * math.sqrt(t) + 8 * n * t
    while logconcave_tail_log(logF, U) > math.log(rel_tol / 10):
        U += 1.0 + math.sqrt(t)
    res = integrate_finite(f, 0.0, U, QuadratureSpec(rel_tol=rel_tol), list(np.linspace(0, U, 8)[1:-1]))
    return meas.constant * float(res.value)

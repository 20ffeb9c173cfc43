"""Radial heat kernels of the fibers SU(2) and CP^1 and their continuations.

SU(2) (radial variable eta in [0, pi), measure sin^2 eta d eta):

    s_t(eta, u) = (2/pi) sum_m e^{-m(m+2)t} U_m(cos eta) U_m(cos u)
                = e^t / (sqrt(pi t) sin eta sin u)
                  * sum_k sinh((eta + 2k pi) u / 2t) e^{-(u^2 + (eta + 2k pi)^2)/4t}

CP^1 (radial variable phi in [0, pi/2], measure sin 2 phi d phi):

    u_t(phi, psi) = sum_m (2m+1) e^{-4m(m+1)t} P_m(cos 2 phi) P_m(cos 2 psi)

Continuations replace u by -iy (SU(2)) or psi by iu (CP^1).  Those grow
like e^{y^2/4t}; every routine works in (sign, log) form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logspace import MantissaExponent, log_sinh, signed_logsumexp
from .special import chebyshev_U_all, legendre_P_all

__all__ = [
    "SeriesTruncation",
    "su2_m_max",
    "cp1_m_max",
    "su2_kernel_spectral",
    "su2_kernel_theta",
    "su2_kernel_continued",
    "su2_continued_log",
    "cp1_kernel",
    "cp1_kernel_continued",
    "legendre_P_log_all",
]

SMALL = 1e-8  # below this, sin eta or sinh y routes to the analytic limit


@dataclass(frozen=True)
class SeriesTruncation:
    """Cutoffs for the m-series and k-sum with a bound on what was dropped."""

    m_max: int
    k_max: int
    tail_bound: float


def _check_t(t):
    if not t > 0:
        raise ValueError("time must be positive")


def _reduce_eta(eta: float) -> float:
    eta = float(eta) % (2 * math.pi)
    if eta >= math.pi:
        eta = 2 * math.pi - eta  # both series are even in eta and 2 pi periodic
    return eta


def su2_m_max(t: float, Y: float = 0.0, tol: float = 1e-16) -> SeriesTruncation:
    """Smallest m with e^{-m(m+2)t} (m+1) e^{(m+1)Y} < tol/10, past the peak.

    The bound majorizes every term (m+1)^2-weighted continued term at
    arguments up to Y; beyond the returned m the ratio of consecutive bounds
    is below rho < 1, giving the geometric tail bound.
    """
    _check_t(t)
    target = math.log(tol / 10)
    m = 0

    def lb(m):
        return -m * (m + 2) * t + 2 * math.log(m + 1) + (m + 1) * Y

    while True:
        past_peak = lb(m + 1) < lb(m)
        if past_peak and lb(m) < target:
            rho = math.exp(lb(m + 1) - lb(m))
            tail = math.exp(lb(m)) * rho / (1 - rho)
            if tail < tol:
                return SeriesTruncation(m, 0, tail)
        m += 1
        if m > 10_000_000:
            raise RuntimeError("series truncation did not terminate")


def su2_k_max(t: float, tol: float = 1e-16, spread: float = math.pi) -> SeriesTruncation:
    """k-cutoff for theta sums whose k-th term is below e^{-(2|k|pi - 2 pi)^2/4t}.

    ``spread`` is the largest |eta - u| style offset in play (at most pi + pi).
    """
    _check_t(t)
    K = 3 if t <= 1 else 1
    while True:
        gap = 2 * (K + 1) * math.pi - 2 * spread
        if gap > 0:
            lead = -gap * gap / (4 * t)
            # geometric majorant over |k| > K (two signs)
            ratio = math.exp(-(2 * math.pi) * gap / (2 * t))
            bound = 2 * math.exp(lead) / (1 - ratio) if ratio < 1 else math.inf
            if bound < tol:
                return SeriesTruncation(0, K, bound)
        K += 1


# ---------------------------------------------------------------------------
# SU(2)


def su2_kernel_spectral(t: float, eta: float, u: float, trunc: SeriesTruncation | None = None,
                        tol: float = 1e-17) -> float:
    """Spectral sum; accurate to ~1e-15 absolutely, so prefer the theta form when s_t is tiny."""
    _check_t(t)
    eta, u = _reduce_eta(eta), _reduce_eta(u)
    if trunc is None:
        trunc = su2_m_max(t, 0.0, tol)
    M = trunc.m_max
    m = np.arange(M + 1)
    ue = chebyshev_U_all(M, math.cos(eta))
    uu = chebyshev_U_all(M, math.cos(u))
    return 2 / math.pi * math.fsum(np.exp(-m * (m + 2) * t) * ue * uu)


def _theta_terms(t, eta, u, K):
    """sign/log of the k-terms of the SU(2) theta sum including limits."""
    k = np.arange(-K, K + 1)
    th = eta + 2 * math.pi * k
    se, su = math.sin(eta), math.sin(u)
    small_e, small_u = se < SMALL, su < SMALL
    gauss = -(u * u + th * th) / (4 * t)
    x = th * u / (2 * t)
    if not small_e and not small_u:
        den = math.log(se) + math.log(su)
        if eta * u / (2 * t) <= 0.5:
            return _paired_terms(t, eta, u, K) + (den,)
        with np.errstate(divide="ignore"):
            return np.sign(x), log_sinh(np.abs(x)) + gauss, den
    if small_e and not small_u:
        # d/d theta [sinh(theta u/2t) e^{-theta^2/4t}] summed over k
        vals = (u / (2 * t)) * np.cosh(x) - (th / (2 * t)) * np.sinh(x)
        with np.errstate(divide="ignore"):
            return np.sign(vals), np.log(np.abs(vals)) + gauss, math.log(su)
    if small_u and not small_e:
        v = th / (2 * t)
        with np.errstate(divide="ignore"):
            return np.sign(v), np.log(np.abs(v)) + gauss, math.log(se)
    vals = (1 / (2 * t) - th * th / (4 * t * t))
    with np.errstate(divide="ignore"):
        return np.sign(vals), np.log(np.abs(vals)) + gauss, 0.0


def _paired_terms(t, eta, u, K):
    """k = 0 and the combined k, -k terms of sum_k sinh(theta_k u/2t) e^{-(u^2 + theta_k^2)/4t}.

    Each pair is a second difference in (eta, u) which vanishes like eta*u;
    writing it through expm1 keeps full relative accuracy for small eta, u.
    Used only for w <= 1/2: for large w the pair is e^{-w} S' and S cancels.
    With a = 2 pi k, p = a u/2t, q = a eta/2t, w = u eta/2t the pair is
    (1/2) e^{-(a^2 + eta^2 + u^2)/4t + p + q} S with
    S = -expm1(-2p) expm1(-2q) + expm1(w)(e^{-2q} + e^{-2p}) - expm1(-w)(1 + e^{-2p-2q}).
    """
    x0 = eta * u / (2 * t)
    signs = [1.0 if x0 > 0 else 0.0]
    logs = [float(log_sinh(x0)) - (eta * eta + u * u) / (4 * t) if x0 > 0 else -math.inf]
    if K >= 1:
        a = 2 * math.pi * np.arange(1, K + 1)
        p, q, w = a * u / (2 * t), a * eta / (2 * t), x0
        S = (-np.expm1(-2 * p) * np.expm1(-2 * q) + math.expm1(w) * (np.exp(-2 * q) + np.exp(-2 * p))
             - math.expm1(-w) * (1 + np.exp(-2 * p - 2 * q)))
        with np.errstate(divide="ignore"):
            L = -(a * a + eta * eta + u * u) / (4 * t) + p + q + np.log(np.abs(S)) - math.log(2.0)
        signs += list(np.sign(S))
        logs += list(L)
    return np.array(signs), np.array(logs)


def su2_kernel_theta(t: float, eta: float, u: float, trunc: SeriesTruncation | None = None,
                     tol: float = 1e-17) -> float:
    _check_t(t)
    eta, u = _reduce_eta(eta), _reduce_eta(u)
    if trunc is None:
        trunc = su2_k_max(t, tol)
    s, l, den = _theta_terms(t, eta, u, trunc.k_max)
    sign, logv = signed_logsumexp(s, l)
    return sign * math.exp(logv + t - 0.5 * math.log(math.pi * t) - den)


def su2_continued_log(t: float, eta: float, y, form: str = "spectral", trunc: SeriesTruncation | None = None,
                      tol: float = 1e-17, strip_gaussian: bool = False):
    """(sign, log|s_t(eta, -iy)|) for an array of y >= 0.

    With ``strip_gaussian`` the factor e^{y^2/4t} is removed from the log so
    that the caller can combine it with its own Gaussian.
    """
    _check_t(t)
    eta = _reduce_eta(eta)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    gauss = y * y / (4 * t)
    if form == "spectral":
        if trunc is None:
            trunc = su2_m_max(t, float(np.max(y)) if y.size else 0.0, tol)
        M = trunc.m_max
        m = np.arange(M + 1)[:, None]
        ue = chebyshev_U_all(M, math.cos(eta))[:, None]
        with np.errstate(divide="ignore"):
            ratio = np.where(y[None, :] > SMALL,
                             log_sinh((m + 1) * np.maximum(y[None, :], SMALL)) - log_sinh(np.maximum(y[None, :], SMALL)),
                             np.log(m + 1.0))
            L = -m * (m + 2) * t + np.log(np.abs(ue)) + ratio
        s, l = signed_logsumexp(np.broadcast_to(np.sign(ue), L.shape), L, axis=0)
        l = l + math.log(2 / math.pi)
        if strip_gaussian:
            l = l - gauss
        return s, l
    if form != "theta":
        raise ValueError("form must be 'spectral' or 'theta'")
    if trunc is None:
        trunc = su2_k_max(t, tol)
    K = trunc.k_max
    k = np.arange(-K, K + 1)[:, None]
    th = eta + 2 * math.pi * k
    x = th * y[None, :] / (2 * t)
    se = math.sin(eta)
    if se >= SMALL:
        vals = np.sin(x)
        den = math.log(se)
    else:
        vals = (y[None, :] / (2 * t)) * np.cos(x) - (th / (2 * t)) * np.sin(x)
        den = 0.0
    with np.errstate(divide="ignore"):
        L = np.log(np.abs(vals)) - th * th / (4 * t)
    s, l = signed_logsumexp(np.sign(vals), L, axis=0)
    with np.errstate(divide="ignore"):
        lsh = np.where(y > SMALL, log_sinh(np.maximum(y, SMALL)), 0.0)
    # y -> 0: sin(theta y/2t)/sinh y -> theta/2t, handled by using sinh y ~ y
    small = y <= SMALL
    if np.any(small) and se >= SMALL:
        vals0 = th / (2 * t) * np.ones((1, int(small.sum())))
        with np.errstate(divide="ignore"):
            L0 = np.log(np.abs(vals0)) - th * th / (4 * t)
        s0, l0 = signed_logsumexp(np.broadcast_to(np.sign(vals0), L0.shape), L0, axis=0)
        s = s.copy()
        l = l.copy()
        s[small], l[small] = s0, l0
    l = l + t - 0.5 * math.log(math.pi * t) - den - lsh
    if not strip_gaussian:
        l = l + gauss
    return s, l


def su2_kernel_continued(t: float, eta: float, y: float, form: str = "spectral",
                         trunc: SeriesTruncation | None = None, tol: float = 1e-17) -> MantissaExponent:
    """s_t(eta, -iy) as a MantissaExponent (the e^{y^2/4t} growth sits in the exponent)."""
    s, l = su2_continued_log(t, eta, [y], form, trunc, tol)
    return MantissaExponent.from_log(float(s[0]), float(l[0]))


# ---------------------------------------------------------------------------
# CP^1


def cp1_m_max(t: float, U: float = 0.0, tol: float = 1e-17) -> SeriesTruncation:
    """Smallest m past the peak with (2m+1) e^{-4m(m+1)t} e^{2mU} < tol/10 and geometric tail < tol."""
    _check_t(t)

    def lb(m):
        return math.log(2 * m + 1) - 4 * m * (m + 1) * t + 2 * m * U

    target = math.log(tol / 10)
    m = 0
    while True:
        if lb(m + 1) < lb(m) and lb(m) < target:
            rho = math.exp(lb(m + 1) - lb(m))
            tail = math.exp(lb(m)) * rho / (1 - rho)
            if tail < tol:
                return SeriesTruncation(m, 0, tail)
        m += 1


def cp1_kernel(t: float, phi: float, psi: float, trunc: SeriesTruncation | None = None,
               tol: float = 1e-17) -> float:
    _check_t(t)
    if trunc is None:
        trunc = cp1_m_max(t, 0.0, tol)
    M = trunc.m_max
    m = np.arange(M + 1)
    a = legendre_P_all(M, math.cos(2 * phi))
    b = legendre_P_all(M, math.cos(2 * psi))
    return math.fsum((2 * m + 1) * np.exp(-4 * m * (m + 1) * t) * a * b)


def legendre_P_log_all(m_max: int, x):
    """log P_m(x) for m = 0..m_max and x >= 1 via the ratio form of the recurrence."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((m_max + 1,) + x.shape)
    if m_max >= 1:
        out[1] = np.log(x)
        ratio = x.copy()  # P_1 / P_0
        for k in range(1, m_max):
            ratio = ((2 * k + 1) * x - k / ratio) / (k + 1)
            out[k + 1] = out[k] + np.log(ratio)
    return out


def cp1_kernel_continued(t: float, phi: float, u, trunc: SeriesTruncation | None = None,
                         tol: float = 1e-17, log: bool = False):
    """sum_m (2m+1) e^{-4m(m+1)t} P_m(cos 2phi) P_m(cosh 2u).

    Returns the value (float) for scalar u, or (sign, log) arrays when
    ``log`` is set.
    """
    _check_t(t)
    ua = np.atleast_1d(np.asarray(u, dtype=float))
    if trunc is None:
        trunc = cp1_m_max(t, float(np.max(ua)) if ua.size else 0.0, tol)
    M = trunc.m_max
    m = np.arange(M + 1)[:, None]
    pa = legendre_P_all(M, math.cos(2 * phi))[:, None]
    with np.errstate(divide="ignore"):
        L = np.log(2 * m + 1.0) - 4 * m * (m + 1) * t + np.log(np.abs(pa)) + legendre_P_log_all(M, np.cosh(2 * ua))
    s, l = signed_logsumexp(np.broadcast_to(np.sign(pa), L.shape), L, axis=0)
    if log:
        return s, l
    if np.ndim(u) == 0:
        return float(s[0] * math.exp(l[0]))
    return s * np.exp(l)

"""Heat kernels q_{t,d} of odd-dimensional real hyperbolic space.

For d = 2m + 1,

    q_{t,d}(cosh delta) = e^{-m^2 t} / ((2 pi)^m sqrt(4 pi t))
                          * (-(1/sinh delta) d/d delta)^m e^{-delta^2/4t}.

The iterated operator is expanded exactly into monomials

    coeff * t^-p * delta^a * sinh(delta)^-b * cosh(delta)^c * e^{-delta^2/4t}

with rational coefficients, b an integer and c in {0, 1} (cosh^2 = 1 + sinh^2
is used to reduce higher cosh powers).  Evaluation happens in log space so
that the Gaussian never underflows before it is combined with its partners.
Near delta = 0 the individual monomials are singular while their sum is not,
so there each power of t is summed as an exact Taylor series instead.
"""
from __future__ import annotations

import math
import threading
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .logspace import ComplexME, MantissaExponent, log_cosh, log_sinh, signed_logsumexp

__all__ = [
    "HeatTerm",
    "HeatTermSum",
    "MantissaExponent",
    "ComplexME",
    "build_q_termsum",
    "q_eval",
    "q_log",
    "q_eval_complex",
    "q_mp",
    "millson_check",
    "heat_equation_residual",
    "heat_equation_exact",
]

Key = tuple  # (p, a, b, c)

# Below this |delta| the per-power Taylor series replaces the monomial sums.
TAYLOR_SWITCH = 1.0
TAYLOR_ORDER = 36  # number of delta^2 orders kept in every group series


@dataclass(frozen=True)
class HeatTerm:
    coeff: Fraction
    t_power: int
    delta_power: int
    inv_sinh_power: int
    cosh_power: int

    @property
    def key(self) -> Key:
        return (self.t_power, self.delta_power, self.inv_sinh_power, self.cosh_power)


# ---------------------------------------------------------------------------
# term algebra on dicts {(p, a, b, c): Fraction}; the Gaussian is implicit


def _canonical(terms: dict) -> dict:
    out = defaultdict(Fraction)
    stack = list(terms.items())
    while stack:
        (p, a, b, c), k = stack.pop()
        if k == 0:
            continue
        if c >= 2:
            stack.append(((p, a, b, c - 2), k))
            stack.append(((p, a, b - 2, c - 2), k))
        else:
            out[(p, a, b, c)] += k
    return {key: v for key, v in sorted(out.items()) if v != 0}


def _add(*dicts, scale=None) -> dict:
    out = defaultdict(Fraction)
    for i, d in enumerate(dicts):
        s = Fraction(1) if scale is None else Fraction(scale[i])
        for key, v in d.items():
            out[key] += s * v
    return _canonical(out)


def d_delta(terms: dict) -> dict:
    """(d/d delta)(T e^{-delta^2/4t}) divided by the Gaussian."""
    out = defaultdict(Fraction)
    for (p, a, b, c), k in terms.items():
        if a:
            out[(p, a - 1, b, c)] += k * a
        if b:
            out[(p, a, b + 1, c + 1)] -= k * b
        if c:
            out[(p, a, b - 1, c - 1)] += k * c
        out[(p + 1, a + 1, b, c)] -= k / 2
    return _canonical(out)


def d_t(terms: dict) -> dict:
    """(d/dt)(T e^{-delta^2/4t}) divided by the Gaussian."""
    out = defaultdict(Fraction)
    for (p, a, b, c), k in terms.items():
        if p:
            out[(p + 1, a, b, c)] -= k * p
        out[(p + 2, a + 2, b, c)] += k / 4
    return _canonical(out)


def mul_coth(terms: dict) -> dict:
    return _canonical({(p, a, b + 1, c + 1): k for (p, a, b, c), k in terms.items()})


def mul_inv_sinh(terms: dict) -> dict:
    return _canonical({(p, a, b + 1, c): k for (p, a, b, c), k in terms.items()})


def apply_radial_operator(terms: dict) -> dict:
    """-(1/sinh delta) d/d delta, the operator generating the dimension ladder."""
    return _add(mul_inv_sinh(d_delta(terms)), scale=[-1])


@dataclass(frozen=True)
class HeatTermSum:
    """Exact expansion of q_{t,d}; the prefactor is kept as the half-dimension m."""

    dimension: int
    terms: tuple

    @property
    def half_dim(self) -> int:
        return (self.dimension - 1) // 2

    def as_dict(self) -> dict:
        return {term.key: term.coeff for term in self.terms}

    def log_prefactor(self, t: float) -> float:
        m = self.half_dim
        return -m * m * t - m * math.log(2 * math.pi) - 0.5 * math.log(4 * math.pi * t)

    def log_prefactor_mp(self, t):
        m = self.half_dim
        return -m * m * t - m * mpmath.log(2 * mpmath.pi) - mpmath.log(4 * mpmath.pi * t) / 2


_build_lock = threading.Lock()
_termsum_cache: dict = {}


def build_q_termsum(d: int) -> HeatTermSum:
    """Exact term expansion of q_{t,d}, d odd and at least 3 (memoized)."""
    if int(d) != d or d < 3 or d % 2 == 0:
        raise ValueError(f"dimension must be an odd integer >= 3, got {d!r}")
    d = int(d)
    with _build_lock:
        if d not in _termsum_cache:
            terms = {(0, 0, 0, 0): Fraction(1)}
            for _ in range((d - 1) // 2):
                terms = apply_radial_operator(terms)
            heat_terms = tuple(HeatTerm(k, *key) for key, k in terms.items())
            _termsum_cache[d] = HeatTermSum(d, heat_terms)
        return _termsum_cache[d]


# ---------------------------------------------------------------------------
# Taylor data


@lru_cache(maxsize=None)
def _sinhc_power_series(s: int, order: int) -> tuple:
    """Coefficients in x^2 of (sinh x / x)^s up to x^(2*order)."""
    base = [Fraction(1, math.factorial(2 * k + 1)) for k in range(order + 1)]
    if s < 0:
        inv = [Fraction(0)] * (order + 1)
        inv[0] = Fraction(1)
        for n in range(1, order + 1):
            inv[n] = -sum(base[j] * inv[n - j] for j in range(1, n + 1))
        base, s = inv, -s
    out = [Fraction(1)] + [Fraction(0)] * order
    for _ in range(s):
        out = [sum(out[j] * base[n - j] for j in range(n + 1)) for n in range(order + 1)]
    return tuple(out)


@lru_cache(maxsize=None)
def _cosh_series(order: int) -> tuple:
    return tuple(Fraction(1, math.factorial(2 * k)) for k in range(order + 1))


def _term_series(a: int, b: int, c: int, top: int) -> dict:
    """delta^a sinh^-b cosh^c as {power: coeff} for powers <= top."""
    lead = a - b
    order = max(0, (top - lead) // 2)
    ser = list(_sinhc_power_series(-b, order))
    if c:
        ch = _cosh_series(order)
        ser = [sum(ser[j] * ch[n - j] for j in range(n + 1)) for n in range(order + 1)]
    return {lead + 2 * k: v for k, v in enumerate(ser) if v != 0}


@dataclass(frozen=True)
class _Compiled:
    p: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    logk: np.ndarray
    sgnk: np.ndarray
    exact: tuple  # ((p, a, b, c), Fraction)
    taylor: tuple  # ((p, lowest_power, float coeffs, Fraction coeffs), ...)


@lru_cache(maxsize=None)
def _compile(frozen_terms: tuple) -> _Compiled:
    terms = dict(frozen_terms)
    keys = list(terms)
    ks = [terms[k] for k in keys]
    top = 2 * TAYLOR_ORDER
    groups: dict = defaultdict(lambda: defaultdict(Fraction))
    for (p, a, b, c), k in terms.items():
        for e, v in _term_series(a, b, c, top).items():
            if e <= top:
                groups[p][e] += k * v
    taylor = []
    for p in sorted(groups):
        coeffs = {e: v for e, v in groups[p].items() if v != 0}
        if not coeffs:
            continue
        lo = min(coeffs)
        exact = [coeffs.get(e, Fraction(0)) for e in range(lo, top + 1)]
        taylor.append((p, lo, np.array([float(v) for v in exact]), tuple(exact)))
    return _Compiled(
        p=np.array([k[0] for k in keys], dtype=float),
        a=np.array([k[1] for k in keys], dtype=float),
        b=np.array([k[2] for k in keys], dtype=float),
        c=np.array([k[3] for k in keys], dtype=float),
        logk=np.array([math.log(abs(v)) for v in ks]),
        sgnk=np.array([1.0 if v > 0 else -1.0 for v in ks]),
        exact=tuple(terms.items()),
        taylor=tuple(taylor),
    )


def _freeze(terms) -> tuple:
    if isinstance(terms, HeatTermSum):
        terms = terms.as_dict()
    return tuple(sorted(terms.items()))


def _horner(coeffs: np.ndarray, x):
    acc = np.zeros_like(x) + coeffs[-1]
    for cf in coeffs[-2::-1]:
        acc = acc * x + cf
    return acc


# ---------------------------------------------------------------------------
# double-precision evaluation


def termsum_log(terms, t: float, delta):
    """(sign, log|S|) of S = sum coeff t^-p delta^a sinh^-b cosh^c (no Gaussian).

    ``delta`` may be an array of non-negative reals.
    """
    comp = _compile(_freeze(terms))
    delta = np.asarray(delta, dtype=float)
    flat = np.atleast_1d(delta).ravel()
    sign = np.empty_like(flat)
    logv = np.empty_like(flat)
    logt = math.log(t)

    far = flat >= TAYLOR_SWITCH
    if np.any(far):
        x = flat[far]
        with np.errstate(divide="ignore"):
            la = np.where(comp.a[:, None] > 0, comp.a[:, None] * np.log(x)[None, :], 0.0)
        L = (comp.logk[:, None] - comp.p[:, None] * logt + la
             - comp.b[:, None] * log_sinh(x)[None, :] + comp.c[:, None] * log_cosh(x)[None, :])
        s, l = signed_logsumexp(np.broadcast_to(comp.sgnk[:, None], L.shape), L, axis=0)
        sign[far], logv[far] = s, l
    near = ~far
    if np.any(near):
        x = flat[near]
        rows_s, rows_l = [], []
        for p, lo, cf, _ in comp.taylor:
            val = _horner(cf, x)
            if lo:
                with np.errstate(divide="ignore"):
                    val = val * x ** lo
            with np.errstate(divide="ignore"):
                rows_l.append(np.log(np.abs(val)) - p * logt)
            rows_s.append(np.sign(val))
        s, l = signed_logsumexp(np.array(rows_s), np.array(rows_l), axis=0)
        sign[near], logv[near] = s, l
    return sign.reshape(delta.shape), logv.reshape(delta.shape)


def termsum_complex_log(terms, t: float, delta):
    """Complex log of S at complex delta (any branch; exp gives S)."""
    comp = _compile(_freeze(terms))
    delta = np.asarray(delta, dtype=complex)
    flat = np.atleast_1d(delta).ravel()
    out = np.empty_like(flat)
    logt = math.log(t)
    far = np.abs(flat) >= TAYLOR_SWITCH
    if np.any(far):
        z = flat[far]
        flip = z.real < 0
        w = np.where(flip, -z, z)  # sinh, cosh parity handled below
        em2 = np.exp(-2.0 * w)
        lsh = w + np.log1p(-em2) - math.log(2.0)
        lch = w + np.log1p(em2) - math.log(2.0)
        lz = np.log(z)
        L = (comp.logk[:, None] - comp.p[:, None] * logt + comp.a[:, None] * lz[None, :]
             - comp.b[:, None] * lsh[None, :] + comp.c[:, None] * lch[None, :])
        # sinh(-w) = -sinh(w): each term picks up (-1)^b when the argument was flipped
        parity = np.where(flip[None, :] & (comp.b[:, None] % 2 == 1), -1.0, 1.0)
        top = np.max(L.real, axis=0)
        acc = np.sum(comp.sgnk[:, None] * parity * np.exp(L - top[None, :]), axis=0)
        out[far] = np.log(acc) + top
    near = ~far
    if np.any(near):
        z = flat[near]
        acc = np.zeros_like(z)
        for p, lo, cf, _ in comp.taylor:
            acc = acc + _horner(cf.astype(complex), z) * z ** lo * t ** (-p)
        out[near] = np.log(acc)
    return out.reshape(delta.shape)


def _check_t(t):
    if not t > 0:
        raise ValueError("time must be positive")


def q_log(d: int, t: float, delta):
    """Vectorized log q_{t,d}(cosh delta) (the kernel is positive)."""
    _check_t(t)
    ts = build_q_termsum(d)
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0):
        raise ValueError("delta must be non-negative")
    _, l = termsum_log(ts, t, delta)
    return ts.log_prefactor(t) + l - delta * delta / (4.0 * t)


def q_eval(d: int, t: float, delta: float) -> MantissaExponent:
    """q_{t,d}(cosh delta) as a MantissaExponent (no underflow at large delta)."""
    return MantissaExponent.from_log(1.0, float(q_log(d, t, float(delta))))


def q_eval_complex(d: int, t: float, delta: complex) -> ComplexME:
    """q_{t,d} at a complex geodesic argument (principal elementary functions)."""
    _check_t(t)
    delta = complex(delta)
    if delta.real < 0:
        raise ValueError("Re(delta) must be non-negative")
    if abs(delta) >= TAYLOR_SWITCH and abs(np.sinh(delta)) < 1e-12:
        raise ZeroDivisionError(f"q_eval_complex: sinh(delta) vanishes at delta={delta}")
    ts = build_q_termsum(d)
    logs = complex(termsum_complex_log(ts, t, delta))
    return ComplexME.from_log(logs + ts.log_prefactor(t) - delta * delta / (4.0 * t))


# ---------------------------------------------------------------------------
# arbitrary precision evaluation (mpmath); used by the high-precision paths


def termsum_mp(terms, t, delta):
    """S(t, delta) in the current mpmath precision; delta may be mpf or mpc."""
    comp = _compile(_freeze(terms))
    delta = mpmath.mpmathify(delta)
    if abs(delta) < mpmath.mpf("0.25"):
        z = delta
        acc = 0
        for p, lo, _, exact in comp.taylor:
            g = 0
            for cf in reversed(exact):
                g = g * z + mpmath.mpf(cf.numerator) / cf.denominator
            acc += g * z ** lo * t ** (-p)
        return acc
    with mpmath.workdps(mpmath.mp.dps + 15):
        sh, ch = mpmath.sinh(delta), mpmath.cosh(delta)
        acc = mpmath.mpf(0)
        for (p, a, b, c), k in comp.exact:
            acc += (mpmath.mpf(k.numerator) / k.denominator) * t ** (-p) * delta ** a * sh ** (-b) * ch ** c
    return +acc


def q_mp(d: int, t, delta):
    """q_{t,d}(cosh delta) as an mpmath number at the working precision."""
    ts = build_q_termsum(d)
    t = mpmath.mpf(t)
    return mpmath.exp(ts.log_prefactor_mp(t) - delta * delta / (4 * t)) * termsum_mp(ts, t, delta)


# ---------------------------------------------------------------------------
# identities


def millson_check(d: int, t: float, delta: float, h: float | None = None) -> float:
    """Relative residual of q_{t,d+2} = -(e^{-dt}/2pi) (1/sinh delta) d/d delta q_{t,d}.

    The derivative is taken exactly in the term algebra; ``h`` is accepted
    for interface compatibility and ignored.
    """
    lower = build_q_termsum(d)
    upper = build_q_termsum(d + 2)
    deriv = d_delta(lower.as_dict())
    delta = float(delta)
    s_up, l_up = termsum_log(upper, t, delta)
    s_dv, l_dv = termsum_log(deriv, t, delta)
    # both sides carry the same Gaussian; compare the remaining factors in log space
    log_lhs = upper.log_prefactor(t) + float(l_up)
    log_rhs = lower.log_prefactor(t) - d * t - math.log(2 * math.pi) + float(l_dv) - float(log_sinh(delta))
    sign_rhs = -float(s_dv)
    s, l = signed_logsumexp([float(s_up), -sign_rhs], [log_lhs, log_rhs])
    return 0.0 if s == 0 else math.exp(l - log_lhs)


def heat_equation_exact(d: int) -> tuple[dict, dict]:
    """Exact (d/dt q, [d^2 + (d-1) coth d] q) term dicts, both divided by prefactor*Gaussian."""
    ts = build_q_termsum(d)
    m = ts.half_dim
    s = ts.as_dict()
    lhs = _add(s, d_t(s), {(p + 1, a, b, c): k for (p, a, b, c), k in s.items()},
               scale=[-m * m, 1, Fraction(-1, 2)])
    first = d_delta(s)
    rhs = _add(d_delta(first), mul_coth(first), scale=[1, d - 1])
    return lhs, rhs


def heat_equation_residual(d: int, t: float, delta) -> np.ndarray:
    """Relative residual |dq/dt - (d^2 + (d-1) coth d) q| / |dq/dt| at each delta."""
    lhs, rhs = heat_equation_exact(d)
    s1, l1 = termsum_log(lhs, t, delta)
    s2, l2 = termsum_log(rhs, t, delta)
    s, l = signed_logsumexp(np.stack([s1, -s2]), np.stack([l1, l2]), axis=0)
    return np.where(s == 0, 0.0, np.exp(l - l1))

"""Orthogonal polynomials and the terminating Gauss hypergeometric sum.

All routines accept scalars or numpy arrays and evaluate by recurrence, so
the removable singularities of the trigonometric closed forms never appear.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = ["chebyshev_U", "chebyshev_U_all", "legendre_P", "legendre_P_all", "hyp2f1_terminating"]


def _check_degree(m: int) -> int:
    if int(m) != m or m < 0:
        raise ValueError(f"degree must be a non-negative integer, got {m!r}")
    return int(m)


def chebyshev_U_all(m_max: int, x):
    """Rows U_0(x), ..., U_{m_max}(x) stacked along a new leading axis."""
    m_max = _check_degree(m_max)
    x = np.asarray(x, dtype=float)
    out = np.empty((m_max + 1,) + x.shape)
    out[0] = 1.0
    if m_max >= 1:
        out[1] = 2.0 * x
    for k in range(1, m_max):
        out[k + 1] = 2.0 * x * out[k] - out[k - 1]
    return out


def chebyshev_U(m: int, x):
    """Chebyshev polynomial of the second kind, U_m(x) on [-1, 1].

    At x = +-1 the recurrence reproduces the limits (+-1)^m (m+1) exactly.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("chebyshev_U requires |x| <= 1")
    val = chebyshev_U_all(m, x)[-1]
    return float(val) if val.ndim == 0 else val


def legendre_P_all(m_max: int, x):
    m_max = _check_degree(m_max)
    x = np.asarray(x, dtype=float)
    out = np.empty((m_max + 1,) + x.shape)
    out[0] = 1.0
    if m_max >= 1:
        out[1] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, m_max):
            out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1)
    return out


def legendre_P(m: int, x):
    """Legendre polynomial P_m(x) by the Bonnet recurrence; any real x.

    Arguments beyond the double range give inf, never an exception.
    """
    val = legendre_P_all(m, x)[-1]
    return float(val) if val.ndim == 0 else val


def hyp2f1_terminating(m: int, x: float) -> float:
    """2F1(m+2, -m; 3/2; x), a polynomial of degree m in x.

    The double x is an exact binary rational, so the sum is formed exactly
    with Fractions and rounded once; alternating cancellation for 0 < x < 1
    costs nothing.
    """
    m = _check_degree(m)
    xq = Fraction(float(x))
    term = Fraction(1)
    acc = Fraction(1)
    for j in range(m):
        term *= Fraction(2 * (m + 2 + j) * (j - m), (3 + 2 * j) * (j + 1)) * xq
        acc += term
    return float(acc)

"""Saddle phase for the steepest-descent analysis of the theta representation.

For r > 0 the exponent f(y) = arccosh(cosh r cosh y)^2 - (y - i eta)^2 is
stationary at y = i phi where

    phi - eta = cosh r sin phi * R(cosh r cos phi),   R(w) = arccosh(w)/sqrt(w^2 - 1).

R extends analytically through w = 1 (to arccos(w)/sqrt(1 - w^2) for w < 1)
and stays finite until w = -1, i.e. |phi| < pi - gd(r) with gd(r) =
arccos(1/cosh r).  The root is first searched in |phi| < gd(r) (where
w > 1); when the equation has no sign change there the search continues on
the analytic extension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = ["PhaseSolution", "R_ratio", "K_ratio", "gd", "phase_residual", "solve_phase", "saddle_exponent", "sign_changes"]

_R_SERIES = (1.0, -1.0 / 3, 2.0 / 15, -2.0 / 35, 8.0 / 315, -8.0 / 693)
_N_SERIES = tuple(_R_SERIES[k] + _R_SERIES[k - 1] for k in range(1, 6))  # (1+e) R(e) - 1


def gd(r: float) -> float:
    """arccos(1/cosh r), the edge of the region where cosh r cos phi > 1."""
    return math.atan(math.sinh(r))


def R_ratio(w: float) -> float:
    """arccosh(w)/sqrt(w^2-1), continued analytically to -1 < w < 1."""
    e = w - 1.0
    if abs(e) < 1e-3:
        return sum(c * e ** k for k, c in enumerate(_R_SERIES))
    if w > 1:
        return math.acosh(w) / math.sqrt((w - 1) * (w + 1))
    if w <= -1:
        raise ValueError("R_ratio is singular at w <= -1")
    return math.acos(w) / math.sqrt((1 - w) * (1 + w))


def K_ratio(w: float) -> float:
    """(w R(w) - 1)/(w^2 - 1), positive and analytic for w > -1."""
    e = w - 1.0
    if abs(e) < 1e-3:
        num = sum(c * e ** k for k, c in enumerate(_N_SERIES))
        return num / (2.0 + e)
    return (w * R_ratio(w) - 1.0) / ((w - 1) * (w + 1))


def phase_residual(phi: float, r: float, eta: float) -> float:
    ch = math.cosh(r)
    return phi - eta - ch * math.sin(phi) * R_ratio(ch * math.cos(phi))


@dataclass(frozen=True)
class PhaseSolution:
    varphi: float
    u_val: float
    bracket: tuple
    residual: float
    extended: bool = False


def solve_phase(r: float, eta: float, extend: bool = True) -> PhaseSolution:
    """Root of the phase equation (bisection-type bracketing solver).

    Returns the root in (-gd(r), gd(r)) when the equation changes sign there;
    otherwise, with ``extend``, the root in (-(pi - gd(r)), pi - gd(r)) on the
    analytic continuation (``extended=True``).  Without a sign change a
    ValueError is raised.
    """
    if not r > 0:
        raise ValueError("solve_phase needs r > 0")
    g = gd(r)
    bracket = (-g, g)
    f = lambda p: phase_residual(p, r, eta)
    if eta == 0:
        return PhaseSolution(0.0, math.cosh(r), bracket, 0.0, False)
    sign = 1.0 if eta > 0 else -1.0
    # the root has the opposite sign to eta; search on that side
    lo_inner = -sign * g
    if f(lo_inner) * f(0.0) < 0:
        root = brentq(f, min(lo_inner, 0.0), max(lo_inner, 0.0), xtol=1e-16, rtol=1e-15, maxiter=500)
        return PhaseSolution(root, math.cosh(r) * math.cos(root), bracket, abs(f(root)), False)
    if not extend:
        raise ValueError(f"phase equation has no root in (-gd(r), gd(r)) for r={r}, eta={eta}")
    edge = math.pi - g
    # approach the singular endpoint until the residual changes sign
    hi = lo_inner
    step = (edge - g) / 2
    outer = -sign * (g + step)
    for _ in range(200):
        if f(outer) * f(hi) < 0:
            break
        hi = outer
        step /= 2
        outer = -sign * (edge - step)
    else:
        raise ValueError(f"phase equation has no root for r={r}, eta={eta}")
    a, b = sorted((hi, outer))
    root = brentq(f, a, b, xtol=1e-16, rtol=1e-15, maxiter=500)
    return PhaseSolution(root, math.cosh(r) * math.cos(root), bracket, abs(f(root)), True)


def saddle_exponent(sol: PhaseSolution, r: float, eta: float) -> float:
    """(phi - eta)^2 tanh^2 r / sin^2 phi, i.e. f(i phi); r^2 in the eta -> 0 limit."""
    phi = sol.varphi
    if abs(phi) < 1e-12:
        return r * r
    return (phi - eta) ** 2 * math.tanh(r) ** 2 / math.sin(phi) ** 2


def sign_changes(r: float, eta: float, samples: int = 10_000, extended: bool = False) -> int:
    """Number of sign changes of the residual over a uniform grid of the bracket."""
    g = gd(r)
    edge = (math.pi - g) if extended else g
    xs = np.linspace(-edge, edge, samples + 2)[1:-1]
    vals = np.array([phase_residual(x, r, eta) for x in xs])
    return int(np.sum(np.sign(vals[1:]) != np.sign(vals[:-1])))

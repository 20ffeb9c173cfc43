"""Small-time behaviour of p_t: predictors, comparisons in log space, and fits.

Regimes
    origin      p_t(0,0)   ~ (4 pi t)^{-(2n+3)} (A_n + B_n t)
    cut locus   p_t(0,eta) ~ C(eta) t^{-(4n+1)} e^{-(2 pi eta + eta^2)/4t}
    axis        p_t(r,0)   ~ (4 pi t)^{-(2n+3/2)} (r/sinh r)^{2n+1} (r coth r - 1)^{-3/2} e^{-r^2/4t}
    general     p_t(r,eta) ~ (4 pi t)^{-(2n+3/2)} |sin phi| / (sin eta sinh r)
                             R(u)^{2n+1} K(u)^{-1/2} e^{-(phi-eta)^2 tanh^2 r / (4t sin^2 phi)}

with phi the saddle phase (phase.solve_phase), u = cosh r cos phi,
R(w) = arccosh(w)/sqrt(w^2-1) and K(w) = (w R(w) - 1)/(w^2 - 1).  At eta = 0
the general predictor reduces to the axis one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ads import EvalContext, KernelPoint, ads_kernel_origin_fiber, ads_kernel_theta
from .phase import K_ratio, PhaseSolution, R_ratio, phase_residual, solve_phase
from .quadrature import a_b_constants

__all__ = [
    "PhaseSolution",
    "solve_phase",
    "Comparison",
    "origin_expansion",
    "origin_leading",
    "cutlocus_prefactor_log",
    "cutlocus_comparison",
    "CutlocusFit",
    "cutlocus_rate",
    "axis_predictor_log",
    "axis_asymptotic",
    "general_predictor_log",
    "general_asymptotic",
    "exponent_fit",
    "ratio_trend",
]


@dataclass(frozen=True)
class Comparison:
    """Predicted and actual values as natural logs, and their ratio."""

    t: float
    log_predicted: float
    log_actual: float
    extra: dict | None = None

    @property
    def ratio(self) -> float:
        return math.exp(self.log_actual - self.log_predicted)

    @property
    def deviation(self) -> float:
        return abs(math.expm1(self.log_actual - self.log_predicted))


def _log_p(n, t, r, eta) -> float:
    return ads_kernel_theta(EvalContext(n, t), KernelPoint(r, eta)).log


def origin_expansion(n: int, t: float) -> Comparison:
    A, B = a_b_constants(n)
    pred = -(2 * n + 3) * math.log(4 * math.pi * t) + math.log(A + B * t)
    return Comparison(t, pred, _log_p(n, t, 0.0, 0.0), {"A": A, "B": B})


def origin_leading(n: int, t: float) -> Comparison:
    """(4 pi t)^{-(2n+3)} A_n alone."""
    A, B = a_b_constants(n)
    pred = -(2 * n + 3) * math.log(4 * math.pi * t) + math.log(A)
    return Comparison(t, pred, _log_p(n, t, 0.0, 0.0), {"A": A, "B": B})


def cutlocus_prefactor_log(n: int, eta: float, form: str = "printed") -> float:
    """log of C(eta) t^{4n+1} e^{(2 pi eta + eta^2)/4t} p_t(0,eta) in the limit.

    'printed':   (pi + eta) eta^{2n-1} / (4 pi sin eta 2^{6n} (2n-1)!)
    'corrected': eta^{2n-1} is replaced by ((2 pi eta + eta^2)/2pi)^{2n-1}; this
                 is the form the residue expansion of the exact kernel converges to.
    """
    base = math.log(math.pi + eta) - math.log(4 * math.pi * math.sin(eta) * 2 ** (6 * n) * math.factorial(2 * n - 1))
    if form == "printed":
        return base + (2 * n - 1) * math.log(eta)
    if form == "corrected":
        return base + (2 * n - 1) * math.log(eta * (2 * math.pi + eta) / (2 * math.pi))
    raise ValueError("form must be 'printed' or 'corrected'")


def cutlocus_comparison(n: int, t: float, eta: float, form: str = "printed") -> Comparison:
    if not 0 < eta < math.pi:
        raise ValueError("eta must lie in (0, pi)")
    pred = cutlocus_prefactor_log(n, eta, form) - (4 * n + 1) * math.log(t) - (2 * math.pi * eta + eta * eta) / (4 * t)
    return Comparison(t, pred, ads_kernel_origin_fiber(EvalContext(n, t), eta).log)


@dataclass(frozen=True)
class CutlocusFit:
    limit: float
    expected: float
    coefficients: tuple  # (limit, a, b) of limit + a t + b t^2
    samples: tuple  # (t, -4t * [log p - log predictor without the Gaussian])
    max_fit_residual: float

    @property
    def relative_error(self) -> float:
        return abs(self.limit / self.expected - 1)


def exponent_fit(ts: Sequence[float], values: Sequence[float], degree: int = 2):
    """Least-squares fit values ~ c0 + c1 t + ... ; returns (coefficients low->high, max residual)."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    coef = np.polynomial.polynomial.polyfit(ts, values, degree)
    fitted = np.polynomial.polynomial.polyval(ts, coef)
    return tuple(float(c) for c in coef), float(np.max(np.abs(fitted - values)))


DEFAULT_CUT_TS = (1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4)


def cutlocus_rate(n: int, eta: float, t_sequence: Sequence[float] = DEFAULT_CUT_TS) -> CutlocusFit:
    """Fit -4t [ln p_t(0,eta) + (4n+1) ln t - ln C(eta)] -> 2 pi eta + eta^2 as t -> 0.

    The printed prefactor is used; a constant error in it only changes the
    linear coefficient of the fit, not its limit.
    """
    if not 0.3 < eta < math.pi - 0.3:
        raise ValueError("eta must lie in (0.3, pi - 0.3)")
    ts = sorted(t_sequence, reverse=True)
    if min(ts) < 1e-4:
        raise ValueError("smallest t must be >= 1e-4")
    pre = cutlocus_prefactor_log(n, eta)
    ys = []
    for t in ts:
        lp = ads_kernel_origin_fiber(EvalContext(n, t), eta).log
        ys.append(-4 * t * (lp + (4 * n + 1) * math.log(t) - pre))
    coef, resid = exponent_fit(ts, ys)
    return CutlocusFit(coef[0], 2 * math.pi * eta + eta * eta, coef, tuple(zip(ts, ys)), resid)


def axis_predictor_log(n: int, t: float, r: float) -> float:
    return (-(2 * n + 1.5) * math.log(4 * math.pi * t) + (2 * n + 1) * math.log(r / math.sinh(r))
            - r * r / (4 * t) - 1.5 * math.log(r / math.tanh(r) - 1))


def axis_asymptotic(n: int, t: float, r: float) -> Comparison:
    if not 0.5 <= r <= 3:
        raise ValueError("the axis predictor is used for r in [0.5, 3]")
    if not 0 < t <= 0.05:
        raise ValueError("t must lie in (0, 0.05]")
    return Comparison(t, axis_predictor_log(n, t, r), _log_p(n, t, r, 0.0))


def general_predictor_log(n: int, t: float, r: float, eta: float, sol: PhaseSolution | None = None) -> float:
    if eta == 0:
        return axis_predictor_log(n, t, r)
    if sol is None:
        sol = solve_phase(r, eta)
    phi, u = sol.varphi, sol.u_val
    return (-(2 * n + 1.5) * math.log(4 * math.pi * t)
            + math.log(abs(math.sin(phi)) / (math.sin(eta) * math.sinh(r)))
            + (2 * n + 1) * math.log(R_ratio(u)) - 0.5 * math.log(K_ratio(u))
            - (phi - eta) ** 2 * math.tanh(r) ** 2 / (4 * t * math.sin(phi) ** 2))


def general_asymptotic(n: int, t: float, r: float, eta: float) -> Comparison:
    if not r > 0.3:
        raise ValueError("r must exceed 0.3")
    if not 0 <= eta < math.pi - 0.3:
        raise ValueError("eta must lie in [0, pi - 0.3)")
    if not 0 < t <= 0.05:
        raise ValueError("t must lie in (0, 0.05]")
    extra = {}
    sol = None
    if eta > 0:
        sol = solve_phase(r, eta)
        extra = {"varphi": sol.varphi, "u": sol.u_val, "residual": abs(phase_residual(sol.varphi, r, eta)),
                 "extended": sol.extended}
    return Comparison(t, general_predictor_log(n, t, r, eta, sol), _log_p(n, t, r, eta), extra)


def ratio_trend(comparisons: Sequence[Comparison]) -> bool:
    """True when |ratio - 1| decreases strictly as t decreases."""
    ordered = sorted(comparisons, key=lambda c: -c.t)
    devs = [c.deviation for c in ordered]
    return all(b < a for a, b in zip(devs, devs[1:]))

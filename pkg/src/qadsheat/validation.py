"""Validation suites: each check reports a measured quantity against its allowed bound."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .ads import EvalContext, KernelPoint, ads_kernel, ads_kernel_spectral, ads_kernel_theta, ads_mass
from .complex_ads import branch_policy, relation_residual
from .fibers import cp1_kernel, su2_kernel_spectral, su2_kernel_theta
from .hyperbolic import heat_equation_residual, millson_check, q_log
from .operators import StencilSpec, change_of_variable_residual, derivative, pde_residual_suite, second_derivative
from .quadrature import QuadratureSpec, integrate_finite
from .special import chebyshev_U, hyp2f1_terminating, legendre_P
from .twistor import TwistorPoint, twistor_kernel, twistor_mass

__all__ = ["CheckResult", "SUITES", "run_suite", "format_result"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    measured: float
    allowed: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.allowed)


def format_result(c: CheckResult) -> str:
    tag = "PASS" if c.passed else "FAIL"
    extra = f"  ({c.detail})" if c.detail else ""
    return f"{tag}  {c.suite}/{c.name}: measured {c.measured:.3e}, allowed {c.allowed:.1e}{extra}"


# ---------------------------------------------------------------------------


REP_TS = (0.1, 0.5, 1.0)
REP_RS = (0.0, 0.5, 1.0, 2.0)
REP_ETAS = (0.0, 0.3, 1.0, 2.0, 3.0)


def representations(ns: Sequence[int] = (1, 2), ts=REP_TS, rs=REP_RS, etas=REP_ETAS) -> list[CheckResult]:
    out = []
    for n in ns:
        worst, where, positive = 0.0, None, True
        for t in ts:
            ctx = EvalContext(n, t)
            for r in rs:
                for eta in etas:
                    p = KernelPoint(r, eta)
                    a, b = ads_kernel_spectral(ctx, p), ads_kernel_theta(ctx, p)
                    positive &= a.value.sign > 0 and b.value.sign > 0
                    d = abs(a.value.ratio(b.value) - 1)
                    if d > worst:
                        worst, where = d, (t, r, eta)
        out.append(CheckResult("representations", f"spectral-vs-theta n={n}", worst, 1e-8, f"worst at t,r,eta={where}"))
        out.append(CheckResult("representations", f"positivity n={n}", 0.0 if positive else 1.0, 0.0))
    return out


def mass(ns: Sequence[int] = (1, 2), twistor_ts=(0.25, 0.5, 1.0)) -> list[CheckResult]:
    out = []
    for n in ns:
        for t in (0.25, 1.0):
            m = ads_mass(EvalContext(n, t))
            out.append(CheckResult("mass", f"ads n={n} t={t}", abs(m - 1), 1e-6))
    if 1 in ns:
        ms = [twistor_mass(EvalContext(1, t)) for t in twistor_ts]
        for t, m in zip(twistor_ts, ms):
            out.append(CheckResult("mass", f"twistor n=1 t={t}", abs(m - 1), 1e-6))
        out.append(CheckResult("mass", "twistor t-independence n=1", max(ms) - min(ms), 1e-8))
    return out


PDE_ADS_GRID = tuple((r, float(e)) for r in (0.4, 0.8, 1.2, 1.6, 2.0) for e in np.linspace(0.3, 2.8, 10))
PDE_TWISTOR_GRID = tuple((r, float(p)) for r in (0.4, 0.8, 1.2, 1.6, 2.0) for p in np.linspace(0.15, 1.4, 10))


def pde(ns: Sequence[int] = (1,), t: float = 0.5, method: str = "spectral") -> list[CheckResult]:
    out = []
    for n in ns:
        def k(s, r, eta, n=n):
            return float(ads_kernel(EvalContext(n, s), KernelPoint(r, eta), method).value)

        st = pde_residual_suite(n, t, k, "radial-L", PDE_ADS_GRID)
        out.append(CheckResult("pde", f"ads radial-L n={n} ({st.count} points)", st.max, 1e-3,
                               f"median {st.median:.1e}, worst at {st.worst_point}"))

        def h(s, r, phi, n=n):
            return float(twistor_kernel(EvalContext(n, s), TwistorPoint(r, phi)).value)

        st = pde_residual_suite(n, t, h, "twistor", PDE_TWISTOR_GRID)
        out.append(CheckResult("pde", f"twistor n={n} ({st.count} points)", st.max, 1e-3,
                               f"median {st.median:.1e}, worst at {st.worst_point}"))
    deltas = np.linspace(0.0, 50.0, 101)
    worst = 0.0
    for d in (3, 5, 7, 11):
        for tt in (1e-3, 0.1, 1.0, 10.0):
            worst = max(worst, float(np.max(heat_equation_residual(d, tt, deltas))))
    out.append(CheckResult("pde", "q heat equation (exact term algebra)", worst, 1e-8))
    return out


def _eigen_residual(f: Callable[[float], float], x: float, lam: float, cot: Callable[[float], float], h: float) -> float:
    lhs = second_derivative(f, x, h) + 2 * cot(x) * derivative(f, x, h)
    rhs = lam * f(x)
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)


def fibers() -> list[CheckResult]:
    out = []
    worst = 0.0
    grid = (0.1, 1.0, 2.0, 3.0)
    for t in (0.05, 0.5, 2.0):
        for eta in grid:
            for u in grid:
                a, b = su2_kernel_spectral(t, eta, u), su2_kernel_theta(t, eta, u)
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    out.append(CheckResult("fibers", "su2 spectral vs theta", worst, 1e-11))

    spec = QuadratureSpec(rel_tol=1e-13)
    worst = 0.0
    for t in (0.1, 1.0):
        for x in (0.0, 0.7, 1.4):
            g = lambda us: np.array([su2_kernel_spectral(t, x, u) * math.sin(u) ** 2 for u in us])
            worst = max(worst, abs(float(integrate_finite(g, 0.0, math.pi, spec).value) - 1))
            g = lambda ps: np.array([cp1_kernel(t, x, p) * math.sin(2 * p) for p in ps])
            worst = max(worst, abs(float(integrate_finite(g, 0.0, math.pi / 2, spec).value) - 1))
    out.append(CheckResult("fibers", "fiber masses", worst, 1e-9))

    worst = 0.0
    cot = lambda x: 1 / math.tan(x)
    cot2 = lambda x: 1 / math.tan(2 * x)
    for m in range(11):
        for x in (0.4, 1.1, 2.3):
            # stay away from zeros of U_m, where a relative residual is meaningless
            if abs(chebyshev_U(m, math.cos(x))) > 1e-2 * (m + 1):
                worst = max(worst, _eigen_residual(lambda e: chebyshev_U(m, math.cos(e)), x, -m * (m + 2), cot, 1e-3))
        for x in (0.3, 0.6, 1.2):
            if abs(legendre_P(m, math.cos(2 * x))) > 1e-2:
                worst = max(worst, _eigen_residual(lambda p: legendre_P(m, math.cos(2 * p)), x, -4 * m * (m + 1), cot2, 1e-3))
    out.append(CheckResult("fibers", "eigenfunction residuals m<=10", worst, 1e-6))

    worst = 0.0
    for m in range(21):
        for u in (0.1, 0.5, 1.0, 2.0):
            lhs = (m + 1) * hyp2f1_terminating(m, (1 - math.cosh(u)) / 2)
            rhs = math.sinh((m + 1) * u) / math.sinh(u)
            worst = max(worst, abs(lhs / rhs - 1))
    out.append(CheckResult("fibers", "terminating 2F1 identity m<=20", worst, 1e-10))
    return out


def millson() -> list[CheckResult]:
    out = []
    for d in (3, 5):
        worst = max(millson_check(d, t, delta) for t in (0.01, 0.1, 0.5, 2.0) for delta in (0.05, 0.5, 1.0, 5.0, 20.0))
        out.append(CheckResult("millson", f"recursion d={d}", worst, 1e-12))
    worst = 0.0
    for t in (0.01, 0.1, 0.5, 2.0):
        for delta in (0.05, 0.5, 1.0, 5.0, 20.0):
            closed = (-1.5 * math.log(4 * math.pi * t) - t + math.log(delta / math.sinh(delta)) - delta * delta / (4 * t))
            worst = max(worst, abs(math.expm1(float(q_log(3, t, delta)) - closed)))
    out.append(CheckResult("millson", "q_{t,3} closed form", worst, 1e-14))
    return out


RELATION_POINTS = tuple((r, e) for r in (1.0, 1.5, 2.0) for e in (0.2, 0.5, 0.8)
                        if math.cosh(r) * math.cos(e) >= 1.2)


def relation(ns: Sequence[int] = (1, 2), ts=(0.3, 1.0)) -> list[CheckResult]:
    out = []
    for n in ns:
        worst, where = 0.0, None
        for t in ts:
            for r, eta in RELATION_POINTS:
                assert branch_policy(r, eta).cut_safe
                v = relation_residual(EvalContext(n, t), r, eta)
                if v > worst:
                    worst, where = v, (t, r, eta)
        out.append(CheckResult("relation", f"complex AdS derivative relation n={n}", worst, 1e-6, f"worst at t,r,eta={where}"))
    return out


COV_FUNCTIONS = {
    "gauss": lambda d: math.exp(-d * d / 2),
    "sech2": lambda d: 1 / math.cosh(d) ** 2,
    "rational": lambda d: 1 / (1 + d * d),
}


def change_of_variable(ns: Sequence[int] = (1, 2)) -> list[CheckResult]:
    out = []
    pts = [(r, z) for r in (0.3, 0.8, 1.3, 2.0) for z in (0.2, 0.5, 1.0, 1.5, 2.2)]
    for n in ns:
        for name, g in COV_FUNCTIONS.items():
            worst = max(change_of_variable_residual(n, g, p, StencilSpec(h=1e-2, levels=2)) for p in pts)
            out.append(CheckResult("change-of-variable", f"{name} n={n} ({len(pts)} points)", worst, 1e-5))
    return out


def small_time(ns: Sequence[int] = (1,)) -> list[CheckResult]:
    """Small-time comparisons against the leading-order predictors (ratios in log space)."""
    from . import asymptotics as A

    out = []
    for n in ns:
        cs = [A.origin_expansion(n, t) for t in (1e-2, 8e-3, 6e-3, 4e-3)]
        out.append(CheckResult("small-time", f"origin n={n} t=1e-2", cs[0].deviation, 0.02))
        out.append(CheckResult("small-time", f"origin trend n={n} through t=4e-3", 0.0 if A.ratio_trend(cs) else 1.0, 0.0,
                               "|ratio - 1| = " + ", ".join(f"{c.deviation:.1e}" for c in cs)))
        for eta in (0.7, 1.5):
            fit = A.cutlocus_rate(n, eta)
            out.append(CheckResult("small-time", f"cut-locus rate n={n} eta={eta}", fit.relative_error, 1e-2,
                                   f"fitted {fit.limit:.8g}, expected {fit.expected:.8g}"))
        for r in (1.0, 2.0):
            c = A.axis_asymptotic(n, 1e-2, r)
            out.append(CheckResult("small-time", f"axis n={n} r={r} t=1e-2", c.deviation, 0.02, f"ratio {c.ratio:.4f}"))
        for r, eta in ((1.0, 1.0), (2.0, 0.5)):
            c = A.general_asymptotic(n, 1e-2, r, eta)
            out.append(CheckResult("small-time", f"general n={n} (r,eta)=({r},{eta}) t=1e-2", c.deviation, 0.05,
                                   f"ratio {c.ratio:.4f}"))
            out.append(CheckResult("small-time", f"phase residual (r,eta)=({r},{eta})", c.extra["residual"], 1e-12))
    return out


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "representations": representations,
    "mass": mass,
    "pde": pde,
    "fibers": fibers,
    "millson": millson,
    "relation": relation,
    "change-of-variable": change_of_variable,
    "small-time": small_time,
}


def run_suite(name: str, ns: Iterable[int] | None = None) -> list[CheckResult]:
    """Run one suite ('all' runs every one); ns restricts the quaternionic dimensions."""
    names = list(SUITES) if name == "all" else [name]
    out = []
    for nm in names:
        if nm not in SUITES:
            raise ValueError(f"unknown suite {nm!r}")
        fn = SUITES[nm]
        if ns is not None and nm in ("representations", "mass", "pde", "relation", "change-of-variable", "small-time"):
            out.extend(fn(tuple(ns)))
        else:
            out.extend(fn())
    return out

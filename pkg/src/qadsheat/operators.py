"""Finite-difference radial operators used to check heat equations and identities.

Notation for the radial pieces:

    base (quaternionic hyperbolic)   D_r   = d_r^2 + ((4n-1) coth r + 3 tanh r) d_r
    SU(2) fiber                      D_eta = d_eta^2 + 2 cot eta d_eta
    CP^1 fiber                       D_phi = d_phi^2 + 2 cot 2phi d_phi

    sub-Laplacian on AdS             L  = D_r + tanh^2 r D_eta
    d'Alembertian                    [] = D_r - D_eta / cosh^2 r    (so L = [] + D_eta)
    twistor sub-Laplacian            L' = D_r + tanh^2 r D_phi

Derivatives are central differences with Richardson extrapolation; each
level removes the next even power of h.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "StencilSpec",
    "default_step",
    "derivative",
    "second_derivative",
    "apply_radial_sublaplacian",
    "apply_dalembertian",
    "apply_twistor_sublaplacian",
    "apply_hyperbolic_radial",
    "change_of_variable_residual",
    "time_derivative",
    "ResidualStats",
    "pde_residual_suite",
]


@dataclass(frozen=True)
class StencilSpec:
    h: float | None = None  # None: chosen from the point
    levels: int = 2

    def __post_init__(self):
        if self.h is not None and not self.h > 0:
            raise ValueError("step must be positive")
        if self.levels < 0:
            raise ValueError("levels must be >= 0")


def default_step(*distances: float) -> float:
    """max(1e-3, 1e-2 * distance to the nearest singular coordinate value)."""
    return max(1e-3, 1e-2 * min(distances))


def _richardson(values: list) -> float:
    for lev in range(1, len(values)):
        fac = 4.0 ** lev
        values = [(fac * values[i + 1] - values[i]) / (fac - 1) for i in range(len(values) - 1)]
    return values[0]


def derivative(f: Callable[[float], float], x: float, h: float, levels: int = 2) -> float:
    return _richardson([(f(x + h / 2 ** j) - f(x - h / 2 ** j)) / (2 * h / 2 ** j) for j in range(levels + 1)])


def second_derivative(f: Callable[[float], float], x: float, h: float, levels: int = 2, fx: float | None = None) -> float:
    f0 = f(x) if fx is None else fx
    vals = []
    for j in range(levels + 1):
        hj = h / 2 ** j
        vals.append((f(x + hj) - 2 * f0 + f(x - hj)) / (hj * hj))
    return _richardson(vals)


def _step(stencil: StencilSpec, *distances) -> float:
    h = stencil.h if stencil.h is not None else default_step(*distances)
    if 2 * h >= min(distances):
        raise ValueError("evaluation point too close to a coordinate singularity for this step")
    return h


def _radial_parts(f, r, x, h, levels):
    """(f_rr, f_r, f_xx, f_x) at (r, x)."""
    f0 = f(r, x)
    fr = lambda s: f(s, x)
    fx = lambda s: f(r, s)
    drr = second_derivative(fr, r, h, levels, f0)
    dr = derivative(fr, r, h, levels)
    dxx = second_derivative(fx, x, h, levels, f0)
    dx = derivative(fx, x, h, levels)
    return drr, dr, dxx, dx


def _base_coeff(n, r):
    return (4 * n - 1) / math.tanh(r) + 3 * math.tanh(r)


def apply_radial_sublaplacian(n: int, f: Callable, at, stencil: StencilSpec = StencilSpec()) -> float:
    """[D_r + tanh^2 r D_eta] f at the point (at.r, at.eta) (or an (r, eta) pair)."""
    r, eta = _coords(at)
    h = _step(stencil, r, eta, math.pi - eta)
    drr, dr, dee, de = _radial_parts(f, r, eta, h, stencil.levels)
    return drr + _base_coeff(n, r) * dr + math.tanh(r) ** 2 * (dee + 2 / math.tan(eta) * de)


def apply_dalembertian(n: int, f: Callable, at, stencil: StencilSpec = StencilSpec()) -> float:
    """[D_r - D_eta / cosh^2 r] f."""
    r, eta = _coords(at)
    h = _step(stencil, r, eta, math.pi - eta)
    drr, dr, dee, de = _radial_parts(f, r, eta, h, stencil.levels)
    return drr + _base_coeff(n, r) * dr - (dee + 2 / math.tan(eta) * de) / math.cosh(r) ** 2


def apply_twistor_sublaplacian(n: int, f: Callable, at, stencil: StencilSpec = StencilSpec()) -> float:
    """[D_r + tanh^2 r D_phi] f with phi in (0, pi/2)."""
    r, phi = _coords(at)
    h = _step(stencil, r, phi, math.pi / 2 - phi)
    drr, dr, dpp, dp = _radial_parts(f, r, phi, h, stencil.levels)
    return drr + _base_coeff(n, r) * dr + math.tanh(r) ** 2 * (dpp + 2 / math.tan(2 * phi) * dp)


def apply_hyperbolic_radial(d: int, g: Callable[[float], float], delta: float,
                            stencil: StencilSpec = StencilSpec()) -> float:
    """[d_delta^2 + (d-1) coth delta d_delta] g for the real hyperbolic space of dimension d."""
    h = _step(stencil, delta)
    return second_derivative(g, delta, h, stencil.levels) + (d - 1) / math.tanh(delta) * derivative(g, delta, h, stencil.levels)


def _coords(at):
    if hasattr(at, "r"):
        return float(at.r), float(getattr(at, "eta", getattr(at, "phi", None)))
    r, x = at
    return float(r), float(x)


def change_of_variable_residual(n: int, g: Callable[[float], float], at, stencil: StencilSpec = StencilSpec()) -> float:
    """Relative mismatch between the two sides of the delta substitution.

    With cosh delta = cosh r cosh zeta the function G(r, zeta) = g(delta)
    satisfies [D_r + (d_zeta^2 + 2 coth zeta d_zeta)/cosh^2 r] G
    = [g'' + (4n+2) coth delta g'](delta).  Both sides are computed by finite
    differences; 0 is returned when both vanish identically.
    """
    r, zeta = _coords(at)
    if not (r > 0 and zeta > 0):
        raise ValueError("need r > 0 and zeta > 0")
    delta = math.acosh(math.cosh(r) * math.cosh(zeta))
    G = lambda a, b: g(math.acosh(math.cosh(a) * math.cosh(b)))
    h = _step(stencil, r, zeta)
    drr, dr, dzz, dz = _radial_parts(G, r, zeta, h, stencil.levels)
    lhs = drr + _base_coeff(n, r) * dr + (dzz + 2 / math.tanh(zeta) * dz) / math.cosh(r) ** 2
    rhs = apply_hyperbolic_radial(4 * n + 3, g, delta, StencilSpec(h, stencil.levels))
    den = max(abs(lhs), abs(rhs))
    return 0.0 if den == 0 else abs(lhs - rhs) / den


def time_derivative(k: Callable[[float], float], t: float, rel_step: float = 1e-3, levels: int = 2) -> float:
    """d/dt with step rel_step * t."""
    return derivative(k, t, rel_step * t, levels)


@dataclass(frozen=True)
class ResidualStats:
    max: float
    median: float
    count: int
    worst_point: tuple
    residuals: tuple


_OPERATORS = {
    "radial-L": apply_radial_sublaplacian,
    "dalembertian": apply_dalembertian,
    "twistor": apply_twistor_sublaplacian,
}


def pde_residual_suite(n: int, t: float, kernel: Callable[[float, float, float], float], operator: str,
                       grid: Iterable[tuple], stencil: StencilSpec = StencilSpec(),
                       rel_step: float = 1e-3) -> ResidualStats:
    """max and median of |d_t k - (op) k| / max(|d_t k|, |k|) over the grid.

    ``kernel(t, r, x)`` is the evaluator; ``operator`` one of 'radial-L',
    'dalembertian', 'twistor'.  The floor |k| keeps the ratio meaningful
    where d_t k changes sign.
    """
    if operator not in _OPERATORS:
        raise ValueError(f"unknown operator {operator!r}")
    op = _OPERATORS[operator]
    memo: dict = {}

    def k(s, a, b):
        # the stencils for k_rr, k_r (and the t-derivative) share points
        key = (s, a, b)
        if key not in memo:
            memo[key] = kernel(s, a, b)
        return memo[key]

    res = []
    pts = []
    for r, x in grid:
        kt = time_derivative(lambda s: k(s, r, x), t, rel_step, stencil.levels)
        lk = op(n, lambda a, b: k(t, a, b), (r, x), stencil)
        k0 = k(t, r, x)
        res.append(abs(kt - lk) / max(abs(kt), abs(k0)))
        pts.append((r, x))
    if not res:
        return ResidualStats(0.0, 0.0, 0, (), ())
    i = int(np.argmax(res))
    return ResidualStats(float(np.max(res)), float(np.median(res)), len(res), pts[i], tuple(res))

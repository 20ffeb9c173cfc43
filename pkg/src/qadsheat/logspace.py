"""Values carried as mantissa * e^exponent, plus signed log-sum-exp helpers."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)

__all__ = ["MantissaExponent", "ComplexME", "signed_logsumexp", "log_sinh", "log_cosh"]


@dataclass(frozen=True)
class MantissaExponent:
    """Real number stored as mantissa * e**exponent.

    |mantissa| lies in [1, 2) (or is exactly 0) and the exponent is an integer
    multiple of ln 2, so the split is unique and survives any magnitude.
    """

    mantissa: float
    exponent: float

    @classmethod
    def from_log(cls, sign: float, logabs: float) -> "MantissaExponent":
        if sign == 0 or logabs == -math.inf:
            return cls(0.0, 0.0)
        if not math.isfinite(logabs):
            raise OverflowError("log-magnitude is not finite")
        k = math.floor(logabs / LN2)
        frac = logabs - k * LN2
        mant = math.exp(frac)
        if mant >= 2.0:  # rounding at the edge
            mant, k = mant / 2.0, k + 1
        elif mant < 1.0:
            mant, k = mant * 2.0, k - 1
        return cls(math.copysign(mant, sign), k * LN2)

    @classmethod
    def from_float(cls, x: float) -> "MantissaExponent":
        if x == 0:
            return cls(0.0, 0.0)
        if not math.isfinite(x):
            raise OverflowError("value is not finite")
        return cls._normalized(x, 0)

    @classmethod
    def _normalized(cls, m: float, k: int) -> "MantissaExponent":
        # exact: only the binary exponent moves
        if m == 0:
            return cls(0.0, 0.0)
        f, e = math.frexp(m)
        return cls(2.0 * f, (k + e - 1) * LN2)

    @property
    def _k(self) -> int:
        return round(self.exponent / LN2)

    @property
    def sign(self) -> float:
        return 0.0 if self.mantissa == 0 else math.copysign(1.0, self.mantissa)

    @property
    def log(self) -> float:
        """Natural log of |value| (-inf for zero)."""
        if self.mantissa == 0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.exponent

    def __float__(self) -> float:
        if self.mantissa == 0:
            return 0.0
        try:
            return math.ldexp(self.mantissa, self._k)
        except OverflowError:
            return math.copysign(math.inf, self.mantissa)

    def __mul__(self, other):
        if isinstance(other, MantissaExponent):
            return MantissaExponent._normalized(self.mantissa * other.mantissa, self._k + other._k)
        other = float(other)
        return self * MantissaExponent.from_float(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, MantissaExponent):
            other = MantissaExponent.from_float(float(other))
        if other.mantissa == 0:
            raise ZeroDivisionError
        return MantissaExponent._normalized(self.mantissa / other.mantissa, self._k - other._k)

    def __neg__(self):
        return MantissaExponent(-self.mantissa, self.exponent)

    def __add__(self, other):
        if not isinstance(other, MantissaExponent):
            other = MantissaExponent.from_float(float(other))
        if other.mantissa == 0:
            return self
        if self.mantissa == 0:
            return other
        k = max(self._k, other._k)
        # the smaller term loses only the bits that fall below the larger one
        m = math.ldexp(self.mantissa, self._k - k) + math.ldexp(other.mantissa, other._k - k)
        return MantissaExponent._normalized(m, k)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def ratio(self, other: "MantissaExponent") -> float:
        """self / other as a plain float (both may underflow individually)."""
        if other.mantissa == 0:
            raise ZeroDivisionError
        if self.mantissa == 0:
            return 0.0
        try:
            return math.ldexp(self.mantissa / other.mantissa, self._k - other._k)
        except OverflowError:
            return math.copysign(math.inf, self.mantissa * other.mantissa)


@dataclass(frozen=True)
class ComplexME:
    """Complex number mantissa * e**exponent with |mantissa| in [1, 2) or 0."""

    mantissa: complex
    exponent: float

    @classmethod
    def from_log(cls, logval: complex) -> "ComplexME":
        """Build from a complex logarithm (real part: log-modulus)."""
        if logval.real == -math.inf:
            return cls(0j, 0.0)
        k = math.floor(logval.real / LN2)
        mant = cmath.exp(complex(logval.real - k * LN2, logval.imag))
        return cls(mant, k * LN2)

    @property
    def log_abs(self) -> float:
        return -math.inf if self.mantissa == 0 else math.log(abs(self.mantissa)) + self.exponent

    def __complex__(self) -> complex:
        if self.mantissa == 0:
            return 0j
        return self.mantissa * math.exp(self.exponent)


def signed_logsumexp(signs, logs, axis=None):
    """Return (sign, log|sum|) of sum_i signs_i * exp(logs_i).

    A zero result comes back as (0, -inf).
    """
    signs = np.asarray(signs, dtype=float)
    logs = np.asarray(logs, dtype=float)
    live = (signs != 0) & np.isfinite(logs)
    safe = np.where(live, logs, -np.inf)
    top = np.max(safe, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(under="ignore"):
        acc = np.sum(np.where(live, signs * np.exp(safe - top), 0.0), axis=axis, keepdims=True)
    with np.errstate(divide="ignore"):
        out_log = np.log(np.abs(acc)) + top
    out_sign = np.sign(acc)
    if axis is None:
        return float(out_sign.reshape(())), float(out_log.reshape(()))
    return np.squeeze(out_sign, axis=axis), np.squeeze(out_log, axis=axis)


def log_sinh(x):
    """log(sinh x) for x > 0 without overflow."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        big = x + np.log1p(-np.exp(-2.0 * x)) - LN2
        small = np.log(np.sinh(np.minimum(x, 1.0)))
    return np.where(x > 1.0, big, small)


def log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - LN2

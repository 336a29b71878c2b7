"""Scalar layer: exact rationals, arbitrary-precision floats, tolerances, serialization.

Two scalar regimes coexist:
  - exact mode: fractions.Fraction, residuals compared to literal zero;
  - float mode: mpmath.mpf at a working precision of precision_digits plus an
    internal engine margin, residuals compared to rel_tol = 10^-(precision-guard).
No interval arithmetic and no symbolic constants anywhere.
"""

from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

# Engine margin added on top of the user-facing precision when setting mp.dps.
# Covers the worst measured cancellation in the moment ladder (about 5 digits)
# with room to spare.
WORKING_MARGIN = 15


class ConfigError(ValueError):
    """Invalid run configuration (bad precision/guard, unknown mode, ...)."""


class DegeneracyError(ArithmeticError):
    """A pivot or normalizing determinant vanished where the theory needs it nonzero."""


class ExtentError(IndexError):
    """A determinant or functional asked for moments beyond the built table."""


# ---- Tolerance policy ----

@dataclass(frozen=True)
class TolerancePolicy:
    """Float-mode tolerances. rel_tol is derived, never set directly."""
    precision_digits: int = 120
    guard_digits: int = 40

    def __post_init__(self):
        if self.precision_digits <= 0:
            raise ConfigError("precision_digits must be positive")
        if self.guard_digits >= self.precision_digits:
            raise ConfigError("guard_digits must be smaller than precision_digits")

    @property
    def working_dps(self):
        return self.precision_digits + WORKING_MARGIN

    def rel_tol(self):
        with mp.workdps(self.working_dps):
            return mp.mpf(10) ** (-(self.precision_digits - self.guard_digits))


def workdps(policy):
    """Context manager pinning mpmath to the policy's working precision."""
    return mp.workdps(policy.working_dps)


# ---- Residuals ----

def relative_residual(diff, scale_terms):
    """|diff| / max(1, max|scale_terms|); exact in, exact out."""
    if isinstance(diff, Fraction):
        scale = max([Fraction(1)] + [abs(Fraction(x)) for x in scale_terms])
        return abs(diff) / scale
    scale = max([mp.mpf(1)] + [abs(x) for x in scale_terms])
    return abs(diff) / scale


def digits_of_agreement(a, b):
    """Common decimal digits of a and b relative to max(1,|b|); large when equal."""
    av = a if isinstance(a, mp.mpf) else mp.mpf(a)
    bv = b if isinstance(b, mp.mpf) else mp.mpf(b)
    diff = abs(av - bv)
    if diff == 0:
        return mp.inf
    return float(-mp.log10(diff / max(mp.mpf(1), abs(bv))))


# ---- Serialization ----

def fmt_scalar(x, precision_digits=None):
    """Fraction -> "p/q" (denominator always explicit); mpf -> fixed-length decimal."""
    if isinstance(x, Fraction):
        return "%d/%d" % (x.numerator, x.denominator)
    if isinstance(x, int):
        return "%d/1" % x
    digits = precision_digits if precision_digits else mp.mp.dps
    if isinstance(x, mp.mpf):
        return mp.nstr(x, digits, strip_zeros=False)
    with mp.workdps(digits + 5):
        return mp.nstr(mp.mpf(x), digits, strip_zeros=False)


def parse_scalar(s, exact, precision_digits=None):
    """Inverse of fmt_scalar for the given regime."""
    if exact:
        return Fraction(s)
    if precision_digits:
        with mp.workdps(precision_digits + WORKING_MARGIN):
            return mp.mpf(s)
    return mp.mpf(s)


# ---- Well-known constants ----

def ln2():
    return mp.ln(2)


def sqrt2():
    return mp.sqrt(2)


def selfcheck_ln2(policy):
    """ln2 at P and at P+20 digits agree to at least P-2 digits."""
    with mp.workdps(policy.precision_digits):
        a = mp.ln(2)
    with mp.workdps(policy.precision_digits + 20):
        b = mp.ln(2)
        d = digits_of_agreement(a, b)
    return d >= policy.precision_digits - 2, d

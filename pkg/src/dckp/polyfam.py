"""Polynomial families P, Q, R as monic coefficient vectors from determinant
cofactors, and the three linear functionals (Cauchy-kernel inner product, the
sqrt2-weighted functional, the plain weighted integral).

All functionals are finite bilinear/linear forms over the moment table; no
integration happens at runtime.  Coefficient vectors are low-to-high degree
with coeffs[n] = 1.
"""

from dataclasses import dataclass

from .numerics import DegeneracyError, ExtentError

# ---- Coefficient container ----

@dataclass(frozen=True)
class PolyCoeffs:
    family: str                 # P | Q | R
    n: int
    s: int
    t: int
    coeffs: tuple               # low -> high, length n+1, monic


def _vec(f):
    """Accept PolyCoeffs, or any sequence of coefficients."""
    if isinstance(f, PolyCoeffs):
        return f.coeffs
    return list(f)


def eval_poly(f, x):
    c = _vec(f)
    acc = 0
    for v in reversed(c):
        acc = acc * x + v
    return acc


# ---- Construction ----

def poly(ctx, family, n, s, t):
    """Monic member of family P, Q or R at (n, s, t).

    P_n = tau_n^{-1} det[m cols 0..n-1 | x^i]; Q_n the same on the column-
    shifted table; R_n = (-1)^{n-1} sigma_{n-1}^{-1} det[phi | m cols 0..n-2 | x^i]
    (n >= 1).
    """
    if family == "P":
        if n < 0:
            raise ExtentError("polynomial order must be >= 0")
        den = ctx.tau(n, s, t)
        raw = ctx.Praw(n, s, t)
        sign = 1
    elif family == "Q":
        if n < 0:
            raise ExtentError("polynomial order must be >= 0")
        den = ctx.xi(n, s, t)
        raw = ctx.Qraw(n, s, t)
        sign = 1
    elif family == "R":
        if n < 1:
            raise ExtentError("third-family polynomial needs order >= 1")
        den = ctx.sigma(n - 1, s, t)
        raw = ctx.Rraw(n, s, t)
        sign = 1 if (n - 1) % 2 == 0 else -1
    else:
        raise ValueError("unknown family %r (one of P, Q, R)" % (family,))
    if den == 0:
        raise DegeneracyError("normalizer of %s_%d vanishes at (s=%d,t=%d)"
                              % (family, n, s, t))
    with ctx.wp():
        coeffs = tuple(sign * c / den for c in raw)
    return PolyCoeffs(family, n, s, t, coeffs)


# ---- Functionals ----

def inner(ctx, f, g, s, t):
    """Cauchy-kernel pairing: sum_{i,j} f_i g_j m_{ij}^{s,t}."""
    fv, gv = _vec(f), _vec(g)
    with ctx.wp():
        tot = ctx.zero()
        for i, fi in enumerate(fv):
            if fi == 0:
                continue
            for j, gj in enumerate(gv):
                if gj == 0:
                    continue
                tot += fi * gj * ctx.m(i, j, s, t)
        return tot


def L_functional(ctx, f, s, t):
    """sum_i f_i phi_i^{s,t} (the sqrt2-weighted endpoint functional)."""
    fv = _vec(f)
    with ctx.wp():
        tot = ctx.zero()
        for i, fi in enumerate(fv):
            if fi != 0:
                tot += fi * ctx.ph(i, s, t)
        return tot


def weighted_integral(ctx, f, s, t):
    """sum_i f_i u_i^{s,t} (plain integral against the weight)."""
    fv = _vec(f)
    with ctx.wp():
        tot = ctx.zero()
        for i, fi in enumerate(fv):
            if fi != 0:
                tot += fi * ctx.u(i, s, t)
        return tot

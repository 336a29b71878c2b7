"""Determinant kernel and the bordered-determinant families built on a moment
table: fraction-free Bareiss for exact entries, fully pivoted LU for floats,
and memoized accessors for the eight families

  tau_n      = det(m_{ij})                     n x n
  xi_n       = det(m_{i,j+1})
  tauhat_n   = det(m_{i,j+2})
  sigma_n    = det[m cols 0..n-1 | phi_i]      (n+1) x (n+1)
  psi_n      = det[m cols 1..n   | phi_i]
  sigma_row_n= det[m_{i+1,j} cols 0..n-1 | phi_{i+1}]
  sigtilde_n = det[m cols 0..n-1 | u_i]
  tautilde_n = det(m rows 0..n-2,n, cols 0..n-1)

Edge conventions: tau_0 = xi_0 = tauhat_0 = 1; tau_{-1} = xi_{-1} = 0;
sigma_{-1} = psi_{-1} = 0; sigtilde_{-1} = 1; tautilde_{n<=0} = 0.  Shifts in s
reindex into the same table; shifts in t use the rank-one evolved tables.

Recurrence coefficients are ratios of these determinants; a vanishing exact
denominator raises DegeneracyError.
"""

from contextlib import nullcontext
from fractions import Fraction
from math import lcm

import mpmath as mp

from .numerics import WORKING_MARGIN, DegeneracyError, ExtentError

# ---- Determinants ----

def det_exact(rows):
    """Determinant of a square Fraction matrix by integer Bareiss elimination."""
    n = len(rows)
    if n == 0:
        return Fraction(1)
    scale = 1
    M = []
    for r in rows:
        d = 1
        for v in r:
            d = lcm(d, Fraction(v).denominator)
        scale *= d
        M.append([int(v * d) for v in r])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for r in range(k + 1, n):
                if M[r][k] != 0:
                    M[k], M[r] = M[r], M[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        pk = M[k][k]
        for i in range(k + 1, n):
            mik = M[i][k]
            row = M[i]
            rk = M[k]
            for j in range(k + 1, n):
                row[j] = (row[j] * pk - mik * rk[j]) // prev
            row[k] = 0
        prev = pk
    return Fraction(sign * M[n - 1][n - 1], scale)


def det_float(rows, dps):
    """Determinant of a square mpf matrix by LU with full pivoting.

    An exactly zero full pivot is a degeneracy (the float path never proves a
    determinant zero), reported rather than returned as 0.
    """
    n = len(rows)
    with mp.workdps(dps):
        if n == 0:
            return mp.mpf(1)
        M = [[mp.mpf(v) for v in r] for r in rows]
        det = mp.mpf(1)
        sign = 1
        for k in range(n):
            pi, pj, best = k, k, abs(M[k][k])
            for i in range(k, n):
                for j in range(k, n):
                    a = abs(M[i][j])
                    if a > best:
                        pi, pj, best = i, j, a
            if best == 0:
                raise DegeneracyError("singular pivot in float elimination")
            if pi != k:
                M[k], M[pi] = M[pi], M[k]
                sign = -sign
            if pj != k:
                for r in M:
                    r[k], r[pj] = r[pj], r[k]
                sign = -sign
            piv = M[k][k]
            det *= piv
            for i in range(k + 1, n):
                fct = M[i][k] / piv
                if fct == 0:
                    continue
                row = M[i]
                rk = M[k]
                for j in range(k + 1, n):
                    row[j] -= fct * rk[j]
        return sign * det


# ---- Context over a stack of t-evolved tables ----

class DetContext:
    """Family evaluators at absolute (n, s, t) over one base moment table.

    t moves through rank-one evolved copies of the base table, s through index
    shifts inside each copy.  All determinants are memoized.
    """

    def __init__(self, base_table, tmax=None):
        self.base = base_table
        self.exact = base_table.exact
        self.dps = (None if self.exact
                    else base_table.precision_digits + WORKING_MARGIN)
        self.s0 = base_table.s0
        self.tables = {base_table.t0: base_table}
        top = max(base_table.phi_by_t.keys(), default=base_table.t0 - 1)
        if tmax is not None:
            top = min(top, tmax - 1)
        cur = base_table
        for t in range(base_table.t0, top + 1):
            cur = cur.evolve_t()
            self.tables[cur.t0] = cur
        self.memo = {}

    # -- scalars --

    def zero(self):
        return Fraction(0) if self.exact else mp.mpf(0)

    def one(self):
        return Fraction(1) if self.exact else mp.mpf(1)

    def _table(self, t):
        tb = self.tables.get(t)
        if tb is None:
            raise ExtentError("no moment table at t=%d (have %s)"
                              % (t, sorted(self.tables)))
        return tb

    def m(self, i, j, s, t):
        ds = s - self.s0
        if ds < 0:
            raise ExtentError("s=%d below table base s0=%d" % (s, self.s0))
        return self._table(t).m(i + ds, j + ds)

    def u(self, i, s, t):
        return self._table(t).u(i + (s - self.s0))

    def ph(self, i, s, t):
        return self._table(t).phi(i + (s - self.s0))

    def has_single(self, t):
        tb = self.tables.get(t)
        return tb is not None and tb.has_single()

    def has_phi(self, t):
        tb = self.tables.get(t)
        return tb is not None and tb.has_phi()

    def _det(self, rows):
        if self.exact:
            return det_exact(rows)
        return det_float(rows, self.dps)

    def _memo(self, key, build):
        v = self.memo.get(key)
        if v is None:
            v = self._det(build())
            self.memo[key] = v
        return v

    # -- determinant families --

    def tau(self, n, s, t):
        if n < 0:
            return self.zero()
        if n == 0:
            return self.one()
        return self._memo(("tau", n, s, t),
                          lambda: [[self.m(i, j, s, t) for j in range(n)]
                                   for i in range(n)])

    def xi(self, n, s, t):
        if n < 0:
            return self.zero()
        if n == 0:
            return self.one()
        return self._memo(("xi", n, s, t),
                          lambda: [[self.m(i, j + 1, s, t) for j in range(n)]
                                   for i in range(n)])

    def tauhat(self, n, s, t):
        if n < 0:
            return self.zero()
        if n == 0:
            return self.one()
        return self._memo(("tauhat", n, s, t),
                          lambda: [[self.m(i, j + 2, s, t) for j in range(n)]
                                   for i in range(n)])

    def sigma(self, n, s, t):
        if n < 0:
            return self.zero()
        return self._memo(("sigma", n, s, t),
                          lambda: [[self.m(i, j, s, t) for j in range(n)]
                                   + [self.ph(i, s, t)] for i in range(n + 1)])

    def psi(self, n, s, t):
        if n < 0:
            return self.zero()
        return self._memo(("psi", n, s, t),
                          lambda: [[self.m(i, j + 1, s, t) for j in range(n)]
                                   + [self.ph(i, s, t)] for i in range(n + 1)])

    def sigma_row(self, n, s, t):
        if n < 0:
            return self.zero()
        return self._memo(("sigrow", n, s, t),
                          lambda: [[self.m(i + 1, j, s, t) for j in range(n)]
                                   + [self.ph(i + 1, s, t)] for i in range(n + 1)])

    def sigtilde(self, n, s, t):
        if n == -1:
            return self.one()
        if n < -1:
            return self.zero()
        return self._memo(("sigtil", n, s, t),
                          lambda: [[self.m(i, j, s, t) for j in range(n)]
                                   + [self.u(i, s, t)] for i in range(n + 1)])

    def tautilde(self, n, s, t):
        if n <= 0:
            return self.zero()
        rows = list(range(n - 1)) + [n]
        return self._memo(("tautil", n, s, t),
                          lambda: [[self.m(i, j, s, t) for j in range(n)]
                                   for i in rows])

    # -- unnormalized polynomial coefficient vectors (degree-ordered) --

    def Praw(self, n, s, t):
        """Cofactor coefficients of tau_n P_n; Praw(-1) is the zero polynomial."""
        if n == -1:
            return []
        if n < -1:
            raise ExtentError("polynomial order below -1")
        key = ("Praw", n, s, t)
        v = self.memo.get(key)
        if v is None:
            v = self._cofactor_vec(n, lambda i, j: self.m(i, j, s, t))
            self.memo[key] = v
        return v

    def Qraw(self, n, s, t):
        if n == -1:
            return []
        if n < -1:
            raise ExtentError("polynomial order below -1")
        key = ("Qraw", n, s, t)
        v = self.memo.get(key)
        if v is None:
            v = self._cofactor_vec(n, lambda i, j: self.m(i, j + 1, s, t))
            self.memo[key] = v
        return v

    def Rraw(self, n, s, t):
        """Border [phi | m cols 0..n-2 | x^i]; defined for n >= 1."""
        if n < 1:
            raise ExtentError("third-family polynomial needs order >= 1")
        key = ("Rraw", n, s, t)
        v = self.memo.get(key)
        if v is None:
            def entry(i, j):
                if j == 0:
                    return self.ph(i, s, t)
                return self.m(i, j - 1, s, t)
            v = self._cofactor_vec(n, entry)
            self.memo[key] = v
        return v

    def _cofactor_vec(self, n, entry):
        # coeff of x^k = (-1)^{k+n} * minor over rows != k
        out = []
        for k in range(n + 1):
            rows = [i for i in range(n + 1) if i != k]
            mino = self._det([[entry(i, j) for j in range(n)] for i in rows])
            out.append(mino if (k + n) % 2 == 0 else -mino)
        return out

    # -- recurrence coefficients --

    def wp(self):
        """Working-precision context for scalar arithmetic on family values."""
        return nullcontext() if self.exact else mp.workdps(self.dps)

    def _div(self, num, den, what):
        if den == 0:
            raise DegeneracyError("vanishing denominator in %s" % what)
        return num / den

    def norm(self, n, s, t):
        """h_n = tau_{n+1}/tau_n, the squared biorthogonal norm."""
        with self.wp():
            return self._div(self.tau(n + 1, s, t), self.tau(n, s, t),
                             "norm h_%d" % n)

    def psub(self, n, s, t):
        """Subleading coefficient p_n of P_n: -tautilde_n/tau_n."""
        with self.wp():
            return self._div(-self.tautilde(n, s, t), self.tau(n, s, t), "p_%d" % n)

    def coeff_a(self, n, s, t):
        if n == 0:
            return self.zero()
        with self.wp():
            return self._div(-self.sigtilde(n, s, t) * self.tau(n - 1, s, t),
                             self.sigtilde(n - 1, s, t) * self.tau(n, s, t),
                             "a_%d" % n)

    def coeff_b(self, n, s, t):
        with self.wp():
            return self.psub(n + 1, s, t) - self.psub(n, s, t)

    def coeff_c(self, n, s, t):
        if n == 0:
            return self.zero()
        with self.wp():
            return self._div(self.tau(n - 1, s, t) * self.tau(n + 1, s, t),
                             self.tau(n, s, t) ** 2, "c_%d" % n)

    def coeff_beta(self, n, s, t):
        with self.wp():
            return self._div(self.xi(n + 1, s, t) * self.tau(n, s, t),
                             self.tau(n + 1, s, t) * self.xi(n, s, t),
                             "beta_%d" % n)

    def coeff_alpha(self, n, s, t, form="ratio"):
        """alpha_n, either the determinant-ratio form or the beta-difference form.

        The two agree exactly iff the tau/xi bilinear identity holds at (n,s,t).
        """
        if n == 0:
            return self.zero()
        with self.wp():
            if form == "ratio":
                return self._div(self.xi(n + 1, s, t) * self.tau(n - 1, s + 1, t),
                                 self.xi(n, s, t) * self.tau(n, s + 1, t),
                                 "alpha_%d" % n)
            if form == "difference":
                return self.coeff_beta(n, s, t) - self._div(
                    self.xi(n + 1, s, t) * self.xi(n, s, t),
                    self.tau(n + 1, s, t) * self.tau(n, s + 1, t),
                    "alpha_%d" % n)
        raise ValueError("unknown alpha form: %r" % (form,))

    def _phi_all_zero(self, s, t):
        tb = self._table(t)
        vec = tb.phi_by_t.get(t)
        if vec is None:
            return False
        return all(v == 0 for v in vec[s - self.s0:])

    def coeff_d(self, n, s, t, edge="raise"):
        if n == 0:
            if edge == "zero":
                return self.zero()
            raise DegeneracyError("d_0 is a band convention (0), not a ratio; "
                                  "pass edge='zero' to use it")
        with self.wp():
            num = -self.sigma(n, s, t) * self.tau(n - 1, s, t + 1)
            den = self.sigma(n - 1, s, t) * self.tau(n, s, t + 1)
            if den == 0 and self._phi_all_zero(s, t):
                return self.zero()
            return self._div(num, den, "d_%d" % n)

    def coeff_e(self, n, s, t, edge="raise"):
        if n == 0:
            if edge == "zero":
                return self.zero()
            raise DegeneracyError("e_0 is a band convention (0), not a ratio; "
                                  "pass edge='zero' to use it")
        with self.wp():
            num = -self.sigma(n, s, t) * self.tau(n - 1, s, t)
            den = self.sigma(n - 1, s, t) * self.tau(n, s, t)
            if den == 0 and self._phi_all_zero(s, t):
                return self.zero()
            return self._div(num, den, "e_%d" % n)

    def coeff_f(self, n, s, t):
        with self.wp():
            return self.coeff_beta(n, s, t) - self.coeff_alpha(n, s, t)

    def coeff_g(self, n, s, t):
        if n == 0:
            return self.zero()
        with self.wp():
            return self.coeff_d(n, s, t) - self.coeff_e(n, s, t)

    def coeff_chat(self, n, s, t):
        """chat_n = c_n - 2 a_n b_{n-1}, the corrected bilinear combination."""
        if n == 0:
            return self.zero()
        with self.wp():
            return (self.coeff_c(n, s, t)
                    - 2 * self.coeff_a(n, s, t) * self.coeff_b(n - 1, s, t))


# ---- Module-level operation wrappers ----

FAMILIES = ("tau", "xi", "tau_hat", "sigma", "psi", "sigma_row",
            "sigma_tilde", "tau_tilde")

_FAMILY_FN = {
    "tau": DetContext.tau,
    "xi": DetContext.xi,
    "tau_hat": DetContext.tauhat,
    "sigma": DetContext.sigma,
    "psi": DetContext.psi,
    "sigma_row": DetContext.sigma_row,
    "sigma_tilde": DetContext.sigtilde,
    "tau_tilde": DetContext.tautilde,
}


def eval_det(ctx, family, n, s, t):
    """Evaluate one determinant family at (n, s, t) with the edge conventions."""
    fn = _FAMILY_FN.get(family)
    if fn is None:
        raise ValueError("unknown family %r (one of %s)" % (family, ", ".join(FAMILIES)))
    return fn(ctx, n, s, t)


def recurrence_coefficients(ctx, n, s, t):
    """(a_n, b_n, c_n) for the four-term recurrence; needs single moments."""
    return (ctx.coeff_a(n, s, t), ctx.coeff_b(n, s, t), ctx.coeff_c(n, s, t))


def transform_coefficients(ctx, n, s, t):
    """dict with beta, both alpha forms, d, e at (n, s, t); n >= 1 for d, e."""
    return {
        "beta": ctx.coeff_beta(n, s, t),
        "alpha_ratio": ctx.coeff_alpha(n, s, t, form="ratio"),
        "alpha_difference": ctx.coeff_alpha(n, s, t, form="difference"),
        "d": ctx.coeff_d(n, s, t),
        "e": ctx.coeff_e(n, s, t),
    }

"""Tau-function lattice assembly, quartic corner solving, and t-propagation.

The lattice stores the determinant families eagerly on the (n, s, t) grid so
identity stencils are O(1) lookups.  The quartic lattice equation, read as a
quadratic in one t-advanced corner, powers an initial-value propagation that
rebuilds a t-slice from the previous slice plus an n <= 1 boundary staircase;
branch selection prefers determinant-oracle proximity, falling back to
previous-slice continuity, and halts on an exact tie.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp

from .numerics import (ConfigError, DegeneracyError, ExtentError,
                       TolerancePolicy, fmt_scalar, relative_residual)
from . import moments, quadrature, detkit

# sigma_row is an internal evaluator for the identity battery, not lattice data
LATTICE_FAMILIES = ("tau", "xi", "tau_hat", "sigma", "psi", "sigma_tilde", "tau_tilde")

STENCIL_SITES = ("n-1,s+1,t", "n,s,t", "n,s+1,t", "n+1,s,t",
                 "n-1,s+1,t+1", "n,s,t+1", "n,s+1,t+1", "n+1,s,t+1")

UNKNOWN_CORNERS = ("n-1,s+1,t+1", "n+1,s,t+1")


@dataclass
class TauLattice:
    mode: str
    Nmax: int
    Smax: int
    Tmax: int
    ctx: object
    precision_digits: object
    values: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    families: tuple = LATTICE_FAMILIES

    def get(self, family, n, s, t):
        return self.values[(family, n, s, t)]

    def sites(self):
        return sorted(self.values.keys())

    def to_json_dict(self):
        return {
            "meta": {"mode": self.mode,
                     "ranges": {"Nmax": self.Nmax, "Smax": self.Smax,
                                "Tmax": self.Tmax},
                     "precision": self.precision_digits,
                     "families": list(self.families)},
            "sites": [{"family": f, "n": n, "s": s, "t": t,
                       "value": fmt_scalar(self.values[(f, n, s, t)],
                                           self.precision_digits),
                       "provenance": self.provenance[(f, n, s, t)]}
                      for (f, n, s, t) in self.sites()],
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["family", "n", "s", "t", "value", "provenance"])
            for (f, n, s, t) in self.sites():
                w.writerow([f, n, s, t,
                            fmt_scalar(self.values[(f, n, s, t)],
                                       self.precision_digits),
                            self.provenance[(f, n, s, t)]])


# ---- Build ----

def _cross_validate_t_evolution(ctx, policy):
    """Rank-one t-evolved bimoments vs direct quadrature at 3 spot entries."""
    base = ctx.base
    tb1 = ctx._table(base.t0 + 1)
    cfg = base.quad_config()
    dps = policy.working_dps
    spots = ((0, 0), (1, 1), (0, 2))
    with mp.workdps(dps):
        for (i, j) in spots:
            direct = quadrature.bimoment_entry(i, j, base.s0, base.t0 + 1, cfg, dps)
            evolved = tb1.m(i, j)
            rel = relative_residual(abs(evolved - direct), [abs(direct)])
            if rel >= policy.rel_tol():
                raise ArithmeticError(
                    "t-evolution cross-validation failed at entry (%d,%d): "
                    "rank-one update and direct quadrature disagree (rel %s)"
                    % (i, j, mp.nstr(rel, 8)))


def _family_available(ctx, family, t):
    if family == "sigma_tilde":
        return ctx.has_single(t)
    if family in ("sigma", "psi"):
        return ctx.has_phi(t)
    return True


def build_lattice(mode, Nmax, Smax, Tmax, config=None):
    """Materialize the determinant families on the grid from a fresh table.

    The base table extent must cover every column shift: K >= Nmax + Smax + 3.
    An explicit smaller K in the config is a configuration error, never a
    silent truncation.  Jacobi tables are cross-validated: the rank-one
    t-evolution is compared with direct quadrature at spot entries.
    """
    cfg = dict(config or {})
    precision = cfg.get("precision", 120)
    guard = cfg.get("guard", 40)
    seed = cfg.get("seed", 0)
    level = cfg.get("quad_level")
    K_need = Nmax + Smax + 3
    K = cfg.get("K") or K_need
    if K < K_need:
        raise ConfigError("table extent K=%d below required %d for "
                          "Nmax=%d Smax=%d" % (K, K_need, Nmax, Smax))
    if mode == "jacobi-float":
        policy = TolerancePolicy(precision_digits=precision, guard_digits=guard)
        qcfg = quadrature.config_for(policy, level=level)
        table = moments.build_jacobi(K, policy, tmax=Tmax, cfg=qcfg)
        prec = precision
    elif mode == "synthetic-generic":
        table = moments.synthetic_generic(seed, K, Tmax=Tmax)
        prec = None
    elif mode == "synthetic-structured":
        table = moments.synthetic_structured(seed, K, tmax=Tmax)
        prec = None
    else:
        raise ConfigError("unknown mode: %r" % (mode,))
    ctx = detkit.DetContext(table)
    if mode == "jacobi-float" and Tmax >= 1:
        _cross_validate_t_evolution(ctx, policy)
    lat = TauLattice(mode, Nmax, Smax, Tmax, ctx, prec)
    lat.families = tuple(f for f in LATTICE_FAMILIES
                         if _family_available(ctx, f, table.t0))
    for f in lat.families:
        fn = detkit._FAMILY_FN[f]
        for t in range(Tmax + 1):
            if not _family_available(ctx, f, t):
                continue
            for n in range(Nmax + 1):
                for s in range(Smax + 1):
                    v = fn(ctx, n, s, t)
                    lat.values[(f, n, s, t)] = v
                    lat.provenance[(f, n, s, t)] = "determinant"
    if mode == "jacobi-float":
        for (f, n, s, t), v in lat.values.items():
            if f in ("tau", "xi") and not v > 0:
                raise DegeneracyError(
                    "positivity violated: %s_%d^{%d,%d} = %s"
                    % (f, n, s, t, fmt_scalar(v, prec)))
    return lat


# ---- Quartic corner solve ----

def _fraction_sqrt(fr):
    if fr < 0:
        raise DegeneracyError("negative discriminant in exact corner solve")
    num, den = fr.numerator, fr.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise DegeneracyError("discriminant is not a perfect rational square; "
                              "stencil does not lie on an exact lattice")
    return Fraction(rn, rd)


def solve_dckp_corner(stencil, which_unknown, dps=None):
    """Two roots of the quartic lattice equation read as a quadratic in one
    t-advanced corner.

    `stencil` maps the other seven relative sites to values; the unknown is
    one of the two admissible corners of the t+1 layer.  A vanishing quadratic
    coefficient degrades to the linear case (returned as a double entry); a
    fully degenerate equation is an error.
    """
    if which_unknown not in UNKNOWN_CORNERS:
        raise ConfigError("unknown corner id %r; expected one of %r"
                          % (which_unknown, UNKNOWN_CORNERS))
    missing = [k for k in STENCIL_SITES
               if k != which_unknown and k not in stencil]
    if missing:
        raise ConfigError("stencil missing sites: %r" % (missing,))
    g = stencil.__getitem__
    exact = isinstance(g("n,s,t"), (Fraction, int))

    def _solve():
        A = g("n,s+1,t") * g("n,s,t") - g("n+1,s,t") * g("n-1,s+1,t")
        P = g("n,s+1,t+1") * g("n,s,t+1")
        R = g("n,s+1,t") * g("n,s,t+1") + g("n,s+1,t+1") * g("n,s,t")
        if which_unknown == "n-1,s+1,t+1":
            Q = g("n+1,s,t+1")
            R = R - g("n+1,s,t+1") * g("n-1,s+1,t")
            S = g("n+1,s,t")
        else:
            Q = g("n-1,s+1,t+1")
            R = R - g("n+1,s,t") * g("n-1,s+1,t+1")
            S = g("n-1,s+1,t")
        # 4 A (P - Q X) = (R - S X)^2
        a2 = S * S
        a1 = 4 * A * Q - 2 * R * S
        a0 = R * R - 4 * A * P
        if a2 == 0:
            if a1 == 0:
                raise DegeneracyError("corner equation fully degenerate "
                                      "(no linear term)")
            x = -a0 / a1
            return (x, x)
        quarter_disc = A * (A * Q * Q - R * S * Q + P * S * S)
        if exact:
            root = _fraction_sqrt(Fraction(quarter_disc))
        else:
            if quarter_disc < 0:
                raise DegeneracyError("negative discriminant in float corner "
                                      "solve: %s" % mp.nstr(quarter_disc, 8))
            root = mp.sqrt(quarter_disc)
        mid = 2 * A * Q - R * S
        return ((-mid + 2 * root) / a2, (-mid - 2 * root) / a2)

    if exact or dps is None:
        return _solve()
    with mp.workdps(dps):
        return _solve()


# ---- Propagation ----

def _stencil_from(getter, n, s, t, skip=None):
    rel = {"n-1,s+1,t": (n - 1, s + 1, t), "n,s,t": (n, s, t),
           "n,s+1,t": (n, s + 1, t), "n+1,s,t": (n + 1, s, t),
           "n-1,s+1,t+1": (n - 1, s + 1, t + 1), "n,s,t+1": (n, s, t + 1),
           "n,s+1,t+1": (n, s + 1, t + 1), "n+1,s,t+1": (n + 1, s, t + 1)}
    return {k: getter(*site) for k, site in rel.items() if k != skip}


def propagate(lat, from_t, to_t, branch="oracle"):
    """Rebuild tau slices (from_t, to_t] from the quartic corner equation.

    Each slice t+1 is filled in increasing n from the previous slice plus
    boundary data: the n=0 row (identically 1) and the n=1 determinant row
    over the staircase range s <= Smax + Nmax - n.  The filled corner is
    tau_{n+1}^{s,t+1}; roots are disambiguated against the determinant oracle
    (branch="oracle") or the previous slice (branch="continuity"), and an
    exact tie halts propagation.
    """
    if not (lat.ctx.base.t0 <= from_t < to_t <= lat.Tmax):
        raise ConfigError("propagation range (%d, %d] outside lattice t-range"
                          % (from_t, to_t))
    if branch not in ("oracle", "continuity"):
        raise ConfigError("branch policy must be 'oracle' or 'continuity'")
    ctx = lat.ctx
    out = TauLattice(lat.mode, lat.Nmax, lat.Smax, lat.Tmax, ctx,
                     lat.precision_digits, dict(lat.values),
                     dict(lat.provenance), lat.families)
    S1 = lat.Smax + lat.Nmax - 1
    work = {}

    def val(n, s, t):
        if n <= 0:
            return ctx.tau(n, s, t)
        if (n, s, t) in work:
            return work[(n, s, t)]
        key = ("tau", n, s, t)
        if key in out.values:
            return out.values[key]
        return ctx.tau(n, s, t)

    for t in range(from_t, to_t):
        # boundary staircase at t+1: the n=0 row is 1 by convention (val
        # handles it); the n=1 row comes from the determinant oracle
        for s in range(S1 + 1):
            work[(1, s, t + 1)] = ctx.tau(1, s, t + 1)
        for n in range(1, lat.Nmax):
            for s in range(S1 - (n - 1) + 1):
                stn = _stencil_from(val, n, s, t, skip="n+1,s,t+1")
                dps = None if ctx.exact else ctx.dps
                r1, r2 = solve_dckp_corner(stn, "n+1,s,t+1", dps=dps)
                if branch == "oracle":
                    ref = ctx.tau(n + 1, s, t + 1)
                else:
                    ref = val(n + 1, s, t)
                d1, d2 = abs(r1 - ref), abs(r2 - ref)
                if r1 != r2 and d1 == d2:
                    raise DegeneracyError(
                        "branch ambiguity at tau_%d^{%d,%d}: roots equidistant "
                        "from the %s reference" % (n + 1, s, t + 1, branch))
                work[(n + 1, s, t + 1)] = r1 if d1 <= d2 else r2
        for (n, s, tt) in list(work.keys()):
            if tt != t + 1 or n < 2 or s > lat.Smax or n > lat.Nmax:
                continue
            out.values[("tau", n, s, tt)] = work[(n, s, tt)]
            out.provenance[("tau", n, s, tt)] = "propagated"
    return out


def propagation_report(lat, base):
    """Max deviation of propagated tau values from their determinant oracle."""
    worst_abs = None
    worst_rel = None
    count = 0
    with base.ctx.wp():
        for key, prov in lat.provenance.items():
            if prov != "propagated":
                continue
            f, n, s, t = key
            oracle = base.ctx.tau(n, s, t)
            diff = abs(lat.values[key] - oracle)
            rel = relative_residual(diff, [abs(oracle)])
            count += 1
            if worst_abs is None or diff > worst_abs:
                worst_abs = diff
            if worst_rel is None or rel > worst_rel:
                worst_rel = rel
    return {"sites": count, "max_abs": worst_abs, "max_rel": worst_rel}

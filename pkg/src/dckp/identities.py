"""Residual verification of the recurrence, spectral transformations, bilinear
and trilinear determinant identities, and the quartic lattice equation.

Every catalog identity is evaluated from independently computed determinants.
Where the printed form of a relation failed empirical adjudication (exact
arithmetic on synthetic data), the catalog carries both the printed and the
confirmed variant: `pass` gates on the confirmed form, and variant_report
emits the per-variant residuals with the chosen form recorded.

Record semantics: exact mode passes iff residual_abs == 0; float mode iff
residual_rel < rel_tol, with scale = max |individual product term| (floor 1).
"""

import json
from dataclasses import dataclass

from .numerics import (TolerancePolicy, DegeneracyError, ExtentError,
                       fmt_scalar, relative_residual)

# ---- Catalog ----

CATALOG_IDS = ("4trr", "prop2.5", "prop2.6", "spec1", "dt1", "trans2", "propr",
               "eq1", "3.2a", "3.2b", "3.3a", "3.3b", "3.4a", "3.4b",
               "tri1", "tri2", "fn-a", "fn-b", "xi-psi-sq", "tau-hat-rel",
               "e1", "e2", "e3", "e4", "dckp")

N_MIN = {"4trr": 1, "prop2.6": 1, "dt1": 1, "trans2": 1, "propr": 1}

NEEDS_SINGLE = {"4trr"}

# ids whose printed form failed adjudication and gate on a confirmed variant
VARIANT_IDS = ("3.2a", "3.3a", "3.3b", "3.4a", "3.4b", "xi-psi-sq", "tau-hat-rel")

# residuals quoted in summary reports are diagnostics, not table data
REPORT_DIGITS = 12

# identities derived through orthogonality: computed but never gating on
# synthetic-generic data
GENERIC_GATES = frozenset({"e1", "e2", "e3", "e4", "dckp"})


def gates(mode, identity_id, t, base_t):
    """Whether a record at this site participates in the pass/fail verdict."""
    if mode == "synthetic-generic":
        return identity_id in GENERIC_GATES
    if mode == "synthetic-structured" and identity_id in NEEDS_SINGLE:
        return t == base_t
    return True


@dataclass
class IdentityRecord:
    identity_id: str
    n: int
    s: int
    t: int
    residual_abs: object
    residual_rel: object
    passed: object              # bool, or None when skipped
    mode: str
    gating: bool = True
    skipped: str = None

    def to_json_dict(self, precision_digits=None):
        if self.skipped is not None:
            return {"id": self.identity_id, "n": self.n, "s": self.s, "t": self.t,
                    "skipped": self.skipped, "pass": None, "mode": self.mode}
        return {"id": self.identity_id, "n": self.n, "s": self.s, "t": self.t,
                "residual_abs": fmt_scalar(self.residual_abs, precision_digits),
                "residual_rel": fmt_scalar(self.residual_rel, precision_digits),
                "pass": bool(self.passed), "mode": self.mode}


# ---- Polynomial-combination helpers ----

def _shift_x(ctx, vec):
    return [ctx.zero()] + list(vec)


def _comb(ctx, pairs):
    """sum coef*vec over (coef, vec) pairs; returns (residual vec, scale terms)."""
    out = []
    scales = []
    for coef, vec in pairs:
        if vec is None:
            continue
        top = ctx.zero()
        for k, v in enumerate(vec):
            while len(out) <= k:
                out.append(ctx.zero())
            term = coef * v
            out[k] = out[k] + term
            if abs(term) > top:
                top = abs(term)
        scales.append(top)
    return out, scales


def _maxabs(ctx, vec):
    top = ctx.zero()
    for v in vec:
        if abs(v) > top:
            top = abs(v)
    return top


def _sum_terms(pairs):
    """(sum of products, list of individual product magnitudes)."""
    total = None
    terms = []
    for sign, factors in pairs:
        prod = None
        for f in factors:
            prod = f if prod is None else prod * f
        terms.append(abs(prod))
        prod = prod if sign > 0 else -prod
        total = prod if total is None else total + prod
    return total, terms


# ---- Identity evaluators: (ctx, n, s, t, variant) -> (residual_abs, scales) ----

def _ev_bilinear(ctx, ident, n, s, t, variant):
    T, X, TH = ctx.tau, ctx.xi, ctx.tauhat
    SG, PS, SR = ctx.sigma, ctx.psi, ctx.sigma_row
    v = variant
    if ident in ("eq1", "e1"):
        pairs = [(+1, [T(n + 1, s, t), T(n - 1, s + 1, t)]),
                 (-1, [T(n, s, t), T(n, s + 1, t)]),
                 (+1, [X(n, s, t), X(n, s, t)])]
    elif ident == "e2":
        pairs = [(+1, [T(n, s, t + 1), T(n - 1, s, t)]),
                 (-1, [T(n, s, t), T(n - 1, s, t + 1)]),
                 (+1, [SG(n - 1, s, t), SG(n - 1, s, t)])]
    elif ident == "e3":
        pairs = [(+1, [T(n, s, t + 1), T(n - 1, s + 1, t)]),
                 (-1, [T(n, s, t), T(n - 1, s + 1, t + 1)]),
                 (+1, [PS(n - 1, s, t), PS(n - 1, s, t)])]
    elif ident == "e4":
        pairs = [(+1, [T(n, s, t + 1), X(n - 1, s, t)]),
                 (-1, [T(n, s, t), X(n - 1, s, t + 1)]),
                 (+1, [PS(n - 1, s, t), SG(n - 1, s, t)])]
    elif ident == "3.2a":
        if v == "printed":
            pairs = [(+1, [T(n + 1, s, t + 1), T(n, s, t)]),
                     (-1, [T(n, s, t + 1), T(n + 1, s, t)]),
                     (-1, [SG(n, s, t), SG(n, s, t)])]
        else:
            pairs = [(+1, [T(n, s, t + 1), T(n + 1, s, t)]),
                     (-1, [T(n + 1, s, t + 1), T(n, s, t)]),
                     (-1, [SG(n, s, t), SG(n, s, t)])]
    elif ident == "3.2b":
        pairs = [(+1, [T(n, s, t), T(n, s + 1, t + 1)]),
                 (-1, [T(n + 1, s, t), T(n - 1, s + 1, t + 1)]),
                 (-1, [X(n, s, t + 1), X(n, s, t)]),
                 (+1, [SG(n - 1, s + 1, t), SG(n, s, t)])]
    elif ident == "3.3a":
        if v == "printed":
            pairs = [(+1, [SG(n + 1, s, t), X(n, s, t)]),
                     (+1, [X(n + 1, s, t), SG(n, s, t)]),
                     (-1, [T(n + 1, s, t), PS(n, s, t)])]
        else:
            pairs = [(+1, [SG(n, s + 1, t), T(n + 1, s, t)]),
                     (-1, [SG(n + 1, s, t), T(n, s + 1, t)]),
                     (-1, [X(n + 1, s, t), PS(n, s, t)])]
    elif ident == "3.3b":
        if v == "printed":
            pairs = [(+1, [SG(n, s + 1, t), X(n, s, t)]),
                     (+1, [SG(n - 1, s + 1, t), X(n + 1, s, t)]),
                     (-1, [T(n, s + 1, t), PS(n, s, t)])]
        else:
            pairs = [(+1, [SG(n, s, t), T(n, s + 1, t)]),
                     (-1, [SG(n - 1, s + 1, t), T(n + 1, s, t)]),
                     (-1, [X(n, s, t), PS(n, s, t)])]
    elif ident == "3.4a":
        sgn = +1 if v == "printed" else -1
        pairs = [(+1, [T(n, s, t + 1), X(n, s, t)]),
                 (-1, [T(n, s, t), X(n, s, t + 1)]),
                 (sgn, [SG(n, s, t), PS(n - 1, s, t)])]
    elif ident == "3.4b":
        sgn = +1 if v == "printed" else -1
        pairs = [(+1, [T(n, s, t), X(n - 1, s, t + 1)]),
                 (-1, [T(n, s, t + 1), X(n - 1, s, t)]),
                 (sgn, [SG(n - 1, s, t), PS(n - 1, s, t)])]
    elif ident == "tri1":
        pairs = [(+1, [SG(n, s + 1, t), X(n, s, t), T(n + 1, s, t)]),
                 (+1, [X(n + 1, s, t), SG(n - 1, s + 1, t), T(n + 1, s, t)]),
                 (-1, [SG(n + 1, s, t), T(n, s + 1, t), X(n, s, t)]),
                 (-1, [X(n + 1, s, t), SG(n, s, t), T(n, s + 1, t)])]
    elif ident == "tri2":
        pairs = [(+1, [T(n, s, t), SG(n - 1, s, t), X(n, s, t + 1)]),
                 (+1, [SG(n, s, t), X(n - 1, s, t + 1), T(n, s, t)]),
                 (-1, [X(n, s, t), T(n, s, t + 1), SG(n - 1, s, t)]),
                 (-1, [SG(n, s, t), X(n - 1, s, t), T(n, s, t + 1)])]
    elif ident == "fn-a":
        pairs = [(+1, [SG(n, s + 1, t), T(n + 1, s, t)]),
                 (-1, [SG(n + 1, s, t), T(n, s + 1, t)]),
                 (-1, [X(n + 1, s, t), PS(n, s, t)])]
    elif ident == "fn-b":
        pairs = [(+1, [SG(n, s, t), T(n, s + 1, t)]),
                 (-1, [SG(n - 1, s + 1, t), T(n + 1, s, t)]),
                 (-1, [X(n, s, t), PS(n, s, t)])]
    elif ident == "xi-psi-sq":
        if v == "printed":
            pairs = [(+1, [X(n + 1, s, t + 1), X(n, s, t)]),
                     (-1, [X(n, s, t + 1), X(n + 1, s, t)]),
                     (-1, [PS(n, s, t), PS(n, s, t)])]
        else:
            pairs = [(+1, [X(n + 1, s, t + 1), X(n, s, t)]),
                     (-1, [X(n, s, t + 1), X(n + 1, s, t)]),
                     (+1, [PS(n, s, t), SR(n, s, t)])]
    elif ident == "tau-hat-rel":
        sgn = -1 if v == "printed" else +1
        pairs = [(+1, [X(n + 1, s, t), X(n - 1, s + 1, t)]),
                 (-1, [X(n, s, t), X(n, s + 1, t)]),
                 (sgn, [T(n, s + 1, t), TH(n, s, t)])]
    else:
        raise ValueError("not a bilinear/trilinear id: %r" % (ident,))
    diff, terms = _sum_terms(pairs)
    return abs(diff), terms


def _ev_dckp(ctx, n, s, t):
    T = ctx.tau
    A0 = T(n, s + 1, t) * T(n, s, t) - T(n + 1, s, t) * T(n - 1, s + 1, t)
    A1 = T(n, s + 1, t + 1) * T(n, s, t + 1) - T(n + 1, s, t + 1) * T(n - 1, s + 1, t + 1)
    B = (T(n, s + 1, t) * T(n, s, t + 1) + T(n, s + 1, t + 1) * T(n, s, t)
         - T(n + 1, s, t + 1) * T(n - 1, s + 1, t) - T(n + 1, s, t) * T(n - 1, s + 1, t + 1))
    diff = 4 * A0 * A1 - B * B
    return abs(diff), [abs(4 * A0 * A1), abs(B * B)]


def _ev_poly(ctx, ident, n, s, t):
    T, X, SG = ctx.tau, ctx.xi, ctx.sigma
    if ident == "prop2.5":
        pairs = [(T(n + 1, s, t), _shift_x(ctx, ctx.Praw(n, s + 1, t))),
                 (-T(n, s + 1, t), ctx.Praw(n + 1, s, t)),
                 (-X(n + 1, s, t), ctx.Qraw(n, s, t))]
    elif ident == "prop2.6":
        pairs = [(T(n - 1, s + 1, t), ctx.Qraw(n, s, t)),
                 (-X(n, s, t), _shift_x(ctx, ctx.Praw(n - 1, s + 1, t))),
                 (T(n, s + 1, t), ctx.Qraw(n - 1, s, t))]
    elif ident == "spec1":
        pm1 = _shift_x(ctx, ctx.Praw(n - 1, s + 1, t)) if n >= 1 else None
        pairs = [(X(n, s, t) * T(n + 1, s, t), _shift_x(ctx, ctx.Praw(n, s + 1, t))),
                 (X(n + 1, s, t) * T(n + 1, s, t), pm1),
                 (-X(n, s, t) * T(n, s + 1, t), ctx.Praw(n + 1, s, t)),
                 (-X(n + 1, s, t) * T(n, s + 1, t), ctx.Praw(n, s, t))]
    elif ident == "dt1":
        sg = 1 if (n - 1) % 2 == 0 else -1
        pairs = [(SG(n - 1, s, t), ctx.Praw(n, s, t + 1)),
                 (-sg * T(n, s, t + 1), ctx.Rraw(n, s, t)),
                 (-SG(n, s, t), ctx.Praw(n - 1, s, t + 1))]
    elif ident == "trans2":
        pairs = [(SG(n - 1, s, t) * T(n, s, t), ctx.Praw(n, s, t + 1)),
                 (-SG(n, s, t) * T(n, s, t), ctx.Praw(n - 1, s, t + 1)),
                 (-SG(n - 1, s, t) * T(n, s, t + 1), ctx.Praw(n, s, t)),
                 (SG(n, s, t) * T(n, s, t + 1), ctx.Praw(n - 1, s, t))]
    else:
        raise ValueError("not a polynomial id: %r" % (ident,))
    combo, scales = _comb(ctx, pairs)
    return _maxabs(ctx, combo), scales


def _ev_propr(ctx, n, s, t):
    rv = ctx.Rraw(n, s, t)
    worst = ctx.zero()
    scales = []
    for i in range(n - 1):
        tot = ctx.zero()
        top = ctx.zero()
        for k, c in enumerate(rv):
            if c == 0:
                continue
            term = c * ctx.m(k, i, s, t)
            tot += term
            if abs(term) > top:
                top = abs(term)
        if abs(tot) > worst:
            worst = abs(tot)
        scales.append(top)
    tot = ctx.zero()
    top = ctx.zero()
    for k, c in enumerate(rv):
        if c == 0:
            continue
        term = c * ctx.ph(k, s, t)
        tot += term
        if abs(term) > top:
            top = abs(term)
    if abs(tot) > worst:
        worst = abs(tot)
    scales.append(top)
    return worst, scales


def _ev_4trr(ctx, n, s, t):
    from .polyfam import poly

    def pvec(k):
        if k < 0:
            return []
        return list(poly(ctx, "P", k, s, t).coeffs)

    a_n = ctx.coeff_a(n, s, t)
    b_n = ctx.coeff_b(n, s, t)
    b_nm1 = ctx.coeff_b(n - 1, s, t)
    c_n = ctx.coeff_c(n, s, t)
    c_nm1 = ctx.coeff_c(n - 1, s, t)
    one = ctx.one()
    pairs = [(one, _shift_x(ctx, pvec(n))),
             (a_n, _shift_x(ctx, pvec(n - 1))),
             (-one, pvec(n + 1)),
             (-(a_n - b_n), pvec(n)),
             (-(a_n * b_nm1 - c_n), pvec(n - 1)),
             (a_n * c_nm1, pvec(n - 2))]
    combo, scales = _comb(ctx, pairs)
    return _maxabs(ctx, combo), scales


def evaluate(ctx, identity_id, n, s, t, variant="confirmed"):
    """(residual_abs, scale_terms) for one identity at one site."""
    with ctx.wp():
        if identity_id == "dckp":
            return _ev_dckp(ctx, n, s, t)
        if identity_id in ("prop2.5", "prop2.6", "spec1", "dt1", "trans2"):
            return _ev_poly(ctx, identity_id, n, s, t)
        if identity_id == "propr":
            return _ev_propr(ctx, n, s, t)
        if identity_id == "4trr":
            return _ev_4trr(ctx, n, s, t)
        return _ev_bilinear(ctx, identity_id, n, s, t, variant)


# ---- Records ----

def _policy_for(ctx, policy):
    if policy is not None:
        return policy
    if ctx.exact:
        return TolerancePolicy()
    return TolerancePolicy(precision_digits=ctx.base.precision_digits)


def make_record(ctx, identity_id, n, s, t, policy=None, variant="confirmed"):
    policy = _policy_for(ctx, policy)
    mode = ctx.base.mode
    gate = gates(mode, identity_id, t, ctx.base.t0)
    try:
        res_abs, scales = evaluate(ctx, identity_id, n, s, t, variant)
    except (ExtentError, DegeneracyError) as exc:
        return IdentityRecord(identity_id, n, s, t, None, None, None, mode,
                              gating=False, skipped=type(exc).__name__ + ": " + str(exc))
    with ctx.wp():
        res_rel = relative_residual(res_abs, scales)
        if ctx.exact:
            ok = res_abs == 0
        else:
            ok = res_rel < policy.rel_tol()
    return IdentityRecord(identity_id, n, s, t, res_abs, res_rel, ok, mode,
                          gating=gate)


# ---- Single-site verification wrappers ----

def verify_recurrence(ctx, n, s, t, policy=None):
    """Four-term recurrence residual record at one site (n >= 1)."""
    if n < 1:
        raise ValueError("recurrence defined for n >= 1")
    return make_record(ctx, "4trr", n, s, t, policy)


def verify_transformations(ctx, n, s, t, policy=None):
    """The five spectral-transformation residual records at one site."""
    out = []
    for ident in ("prop2.5", "prop2.6", "spec1", "dt1", "trans2"):
        if n >= N_MIN.get(ident, 0):
            out.append(make_record(ctx, ident, n, s, t, policy))
    return out


def verify_bilinear(ctx, identity_id, n, s, t, policy=None):
    return make_record(ctx, identity_id, n, s, t, policy)


def verify_trilinear(ctx, identity_id, n, s, t, policy=None):
    if identity_id not in ("tri1", "tri2"):
        raise ValueError("trilinear ids are tri1, tri2")
    return make_record(ctx, identity_id, n, s, t, policy)


def verify_dckp(ctx, n, s, t, policy=None):
    return make_record(ctx, "dckp", n, s, t, policy)


# ---- Suite ----

def run_suite(ctx, nmax, smax, tmax, policy=None, ids=None):
    """All catalog identities on the site grid, sorted by (id, n, s, t).

    Sites a mode cannot evaluate (missing singles, exhausted extent, degenerate
    denominators) yield skipped records; failures are recorded, never thrown.
    """
    chosen = list(ids) if ids else list(CATALOG_IDS)
    for ident in chosen:
        if ident not in CATALOG_IDS:
            raise ValueError("unknown identity id: %r" % (ident,))
    mode = ctx.base.mode
    records = []
    for ident in chosen:
        for n in range(N_MIN.get(ident, 0), nmax + 1):
            for s in range(smax + 1):
                for t in range(tmax + 1):
                    if ident in NEEDS_SINGLE and not ctx.has_single(t):
                        records.append(IdentityRecord(
                            ident, n, s, t, None, None, None, mode,
                            gating=False, skipped="mode"))
                        continue
                    records.append(make_record(ctx, ident, n, s, t, policy))
    records.sort(key=lambda r: (r.identity_id, r.n, r.s, r.t))
    return records


def suite_summary(records):
    """Max residual per identity and the overall gating verdict."""
    worst = {}
    all_pass = True
    for r in records:
        if r.skipped is not None:
            continue
        key = r.identity_id
        cur = worst.get(key)
        val = r.residual_rel
        if cur is None or val > cur:
            worst[key] = val
        if r.gating and not r.passed:
            all_pass = False
    return {"max_residual_rel": worst, "all_gating_pass": all_pass}


def write_report(records, path, precision_digits=None):
    """JSON-lines report, one record per line."""
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json_dict(precision_digits)) + "\n")


# ---- Adjudication artifacts ----

def variant_report(ctx, nmax, smax, tmax, policy=None, ids=VARIANT_IDS):
    """Per-variant residuals for the sign-contested identities.

    For each id the printed and confirmed forms are evaluated across the grid;
    the chosen variant (the one gating `pass`) is recorded in the metadata.
    """
    policy = _policy_for(ctx, policy)
    report = {}
    for ident in ids:
        entry = {"variants": {}, "chosen": None}
        for variant in ("printed", "confirmed"):
            worst_rel = None
            worst_abs = None
            count = 0
            for n in range(N_MIN.get(ident, 0), nmax + 1):
                for s in range(smax + 1):
                    for t in range(tmax + 1):
                        try:
                            res_abs, scales = evaluate(ctx, ident, n, s, t, variant)
                        except (ExtentError, DegeneracyError):
                            continue
                        with ctx.wp():
                            rel = relative_residual(res_abs, scales)
                        count += 1
                        if worst_rel is None or rel > worst_rel:
                            worst_rel, worst_abs = rel, res_abs
            entry["variants"][variant] = {
                "max_residual_rel": fmt_scalar(worst_rel, REPORT_DIGITS)
                if worst_rel is not None else None,
                "max_residual_abs": fmt_scalar(worst_abs, REPORT_DIGITS)
                if worst_abs is not None else None,
                "sites": count,
                "passes": bool(worst_rel is not None
                               and (worst_abs == 0 if ctx.exact
                                    else worst_rel < policy.rel_tol())),
            }
        for variant in ("printed", "confirmed"):
            if entry["variants"][variant]["passes"]:
                entry["chosen"] = variant
                break
        report[ident] = entry
    return report


def shift_closure_report(ctx, n, s, t):
    """The column-shift substitution applied to the t-step bilinear.

    Substituting m_{ij} -> m_{i,j+1} maps tau -> xi and sigma -> psi, carrying
    the t-step bilinear's stencil onto the xi/psi stencil.  The resulting form
    differs from the printed xi-psi-sq relation by exactly 2 psi^2 (the two
    share their xi terms; the psi^2 signs are opposite), and neither vanishes:
    the relation that does hold replaces psi^2 by psi*sigma_row.  All three
    residuals and the exact 2 psi^2 link are returned.
    """
    X, PS, SR = ctx.xi, ctx.psi, ctx.sigma_row
    with ctx.wp():
        r_subs = (X(n + 1, s, t + 1) * X(n, s, t)
                  - X(n + 1, s, t) * X(n, s, t + 1)
                  + PS(n, s, t) ** 2)
        r_printed = (X(n + 1, s, t + 1) * X(n, s, t)
                     - X(n, s, t + 1) * X(n + 1, s, t)
                     - PS(n, s, t) ** 2)
        r_confirmed = (X(n + 1, s, t + 1) * X(n, s, t)
                       - X(n, s, t + 1) * X(n + 1, s, t)
                       + PS(n, s, t) * SR(n, s, t))
        link = r_subs - r_printed - 2 * PS(n, s, t) ** 2
    return {"subs_image_of_t_step": r_subs,
            "printed_xi_psi_sq": r_printed,
            "confirmed_xi_psi_row": r_confirmed,
            "link_residual": link}

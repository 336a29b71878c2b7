"""Command-line front end: selfcheck, lattice export, identity verification,
polynomial dumps, and Lax-system reports.

Configuration comes from flags, optionally layered over a JSON config file
(flags win).  Outputs are byte-identical for identical configs; diagnostics go
to standard error.  Exit codes: 0 success, 1 verification failure, 2 usage or
configuration error.
"""

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .numerics import (ConfigError, DegeneracyError, ExtentError,
                       TolerancePolicy, WORKING_MARGIN, digits_of_agreement,
                       fmt_scalar, parse_scalar, selfcheck_ln2)
from . import moments, quadrature, detkit, polyfam, identities, lax, lattice

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2

MODE_ALIASES = {"jacobi": "jacobi-float", "generic": "synthetic-generic",
                "structured": "synthetic-structured"}

# guard defaults to min(40, precision // 3) so scaled-down precisions keep a
# meaningful tolerance without explicit tuning
DEFAULTS = {"mode": "jacobi-float", "precision": 120, "guard": None,
            "n": 4, "s": 2, "t": 2, "seed": 0, "quad_level": None,
            "out": None, "format": "json", "jobs": 1, "identities": None}


@dataclass
class RunConfig:
    command: str
    mode: str
    precision: int
    guard: int
    Nmax: int
    Smax: int
    Tmax: int
    seed: int
    quad_level: object
    out: object
    format: str
    jobs: int
    identities: object

    def policy(self):
        return TolerancePolicy(precision_digits=self.precision,
                               guard_digits=self.guard)


# ---- Config resolution ----

def _build_parser():
    p = argparse.ArgumentParser(
        prog="dckp",
        description="Biorthogonal tau-function lattice: build, verify, export.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("selfcheck", "quadrature, arithmetic, and serialization sanity"),
            ("lattice", "build the determinant lattice and export it"),
            ("verify", "run the identity suite and report residuals"),
            ("polys", "dump polynomial coefficient vectors"),
            ("lax", "operator compatibility, eigen relations, six equations")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", help="JSON config file; flags win")
        sp.add_argument("--mode", help="jacobi-float | synthetic-generic | "
                                       "synthetic-structured (aliases: jacobi, "
                                       "generic, structured)")
        sp.add_argument("--precision", type=int, help="decimal digits (float mode)")
        sp.add_argument("--guard", type=int, help="guard digits; rel_tol = "
                                                  "10^-(precision-guard)")
        sp.add_argument("--n", type=int, help="max polynomial order")
        sp.add_argument("--s", type=int, help="max s shift")
        sp.add_argument("--t", type=int, help="max t shift")
        sp.add_argument("--seed", type=int, help="synthetic data seed")
        sp.add_argument("--quad-level", type=int, dest="quad_level",
                        help="initial tanh-sinh refinement level")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), help="artifact format")
        sp.add_argument("--jobs", type=int, help="worker processes for verify")
        sp.add_argument("--identities", help="comma-separated identity id filter")
    return p


def resolve_config(args):
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError("cannot read config file: %s" % exc)
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError("unknown config keys: %s" % sorted(unknown))
        merged.update(file_cfg)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    mode = MODE_ALIASES.get(merged["mode"], merged["mode"])
    if mode not in moments.MODES:
        raise ConfigError("unknown mode: %r" % (merged["mode"],))
    if merged["precision"] < 3:
        raise ConfigError("precision must be at least 3 digits")
    if merged["guard"] is None:
        merged["guard"] = min(40, merged["precision"] // 3)
    if merged["guard"] >= merged["precision"]:
        raise ConfigError("guard digits (%d) must be smaller than precision "
                          "digits (%d)" % (merged["guard"], merged["precision"]))
    for key in ("n", "s", "t"):
        if merged[key] < 0:
            raise ConfigError("--%s must be nonnegative" % key)
    if merged["jobs"] < 1:
        raise ConfigError("--jobs must be at least 1")
    if merged["format"] not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    ids = merged["identities"]
    if isinstance(ids, str):
        ids = tuple(x.strip() for x in ids.split(",") if x.strip())
    if ids:
        bad = [x for x in ids if x not in identities.CATALOG_IDS]
        if bad:
            raise ConfigError("unknown identity ids: %s" % bad)
        if (mode == "synthetic-generic"
                and args.command == "verify"
                and all(x in identities.NEEDS_SINGLE for x in ids)):
            raise ConfigError(
                "synthetic-generic mode has no single moments, so %s can never "
                "gate; use synthetic-structured or jacobi-float" % list(ids))
    else:
        ids = None
    return RunConfig(args.command, mode, merged["precision"], merged["guard"],
                     merged["n"], merged["s"], merged["t"], merged["seed"],
                     merged["quad_level"], merged["out"], merged["format"],
                     merged["jobs"], ids)


# ---- Shared plumbing ----

def _build_table(mode, K, seed, tmax, precision, guard, level):
    if mode == "jacobi-float":
        policy = TolerancePolicy(precision_digits=precision, guard_digits=guard)
        qcfg = quadrature.config_for(policy, level=level)
        return moments.build_jacobi(K, policy, tmax=tmax, cfg=qcfg)
    if mode == "synthetic-generic":
        return moments.synthetic_generic(seed, K, Tmax=tmax)
    return moments.synthetic_structured(seed, K, tmax=tmax)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _diag(msg):
    print(msg, file=sys.stderr)


# ---- selfcheck ----

def cmd_selfcheck(cfg):
    policy = cfg.policy()
    dps = policy.working_dps
    need = cfg.precision - 20
    lines = []
    ok_all = True

    ok, d = selfcheck_ln2(policy)
    lines.append(("ln2-stability", d, cfg.precision - 2, ok))
    ok_all &= ok

    qcfg = quadrature.config_for(policy, level=cfg.quad_level)
    with mp.workdps(dps):
        m00 = quadrature.bimoment_entry(0, 0, 0, 0, qcfg, dps)
        d = digits_of_agreement(m00, 2 * mp.ln(2))
    ok = d >= need
    lines.append(("m00-vs-2ln2", d, need, ok))
    ok_all &= ok

    with mp.workdps(dps):
        K = 6
        bm = quadrature.bimoment_table(K, 0, 0, qcfg, dps)
        uv = quadrature.single_vector(K, 0, 0, qcfg, dps)
        worst = mp.inf
        for i in range(K - 1):
            for j in range(K - 1):
                if i + j > K - 2:
                    continue
                d = digits_of_agreement(bm[i + 1][j] + bm[i][j + 1],
                                        uv[i] * uv[j])
                worst = min(worst, d)
    ok = worst >= need
    lines.append(("antidiagonal-grid", worst, need, ok))
    ok_all &= ok

    import random
    rng = random.Random("selfcheck:0")
    frac_ok = True
    for _ in range(50):
        fr = Fraction(rng.randrange(-10**30, 10**30),
                      rng.randrange(1, 10**30))
        frac_ok &= parse_scalar(fmt_scalar(fr), True) == fr
    frac_ok &= parse_scalar(fmt_scalar(Fraction(0)), True) == 0
    lines.append(("rational-round-trip", mp.inf if frac_ok else 0.0,
                  "exact", frac_ok))
    ok_all &= frac_ok

    with mp.workdps(dps):
        x = mp.pi / 7
        y = parse_scalar(fmt_scalar(x, cfg.precision), False, cfg.precision)
        d = digits_of_agreement(x, y)
    ok = d >= cfg.precision - 2
    lines.append(("float-round-trip", d, cfg.precision - 2, ok))
    ok_all &= ok

    for name, d, need_d, ok in lines:
        dtxt = "exact" if d == mp.inf else "%.1f" % d
        print("%-20s digits=%s need=%s %s"
              % (name, dtxt, need_d, "ok" if ok else "FAIL"))
    return EXIT_OK if ok_all else EXIT_VERIFY


# ---- lattice ----

def cmd_lattice(cfg):
    lat = lattice.build_lattice(cfg.mode, cfg.Nmax, cfg.Smax, cfg.Tmax,
                                {"precision": cfg.precision, "guard": cfg.guard,
                                 "seed": cfg.seed, "quad_level": cfg.quad_level})
    if cfg.format == "json":
        text = json.dumps(lat.to_json_dict(), indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["family", "n", "s", "t", "value", "provenance"])
        for (f, n, s, t) in lat.sites():
            w.writerow([f, n, s, t,
                        fmt_scalar(lat.values[(f, n, s, t)], lat.precision_digits),
                        lat.provenance[(f, n, s, t)]])
        text = buf.getvalue()
    _emit(text, cfg.out)
    _diag("lattice: %d sites (%s mode)" % (len(lat.values), cfg.mode))
    return EXIT_OK


# ---- verify ----

def _verify_chunk(payload):
    (mode, K, seed, tmax, precision, guard, level, ids, nmax, smax, tsites) = payload
    table = _build_table(mode, K, seed, tmax, precision, guard, level)
    ctx = detkit.DetContext(table)
    policy = TolerancePolicy(precision_digits=precision, guard_digits=guard)
    return identities.run_suite(ctx, nmax, smax, tsites, policy=policy, ids=ids)


def cmd_verify(cfg):
    K = cfg.Nmax + cfg.Smax + 3
    ids = list(cfg.identities) if cfg.identities else list(identities.CATALOG_IDS)
    jobs = min(cfg.jobs, len(ids))
    policy = cfg.policy()
    table = _build_table(cfg.mode, K, cfg.seed, cfg.Tmax, cfg.precision,
                         cfg.guard, cfg.quad_level)
    ctx = detkit.DetContext(table)
    if jobs <= 1:
        recs = identities.run_suite(ctx, cfg.Nmax, cfg.Smax, cfg.Tmax,
                                    policy=policy, ids=ids)
    else:
        common = (cfg.mode, K, cfg.seed, cfg.Tmax, cfg.precision, cfg.guard,
                  cfg.quad_level)
        chunks = [tuple(ids[i::jobs]) for i in range(jobs)]
        recs = []
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for part in ex.map(_verify_chunk,
                               [common + (ch, cfg.Nmax, cfg.Smax, cfg.Tmax)
                                for ch in chunks]):
                recs.extend(part)
        recs.sort(key=lambda r: (r.identity_id, r.n, r.s, r.t))
    contested = [i for i in identities.VARIANT_IDS if i in ids]
    adjud = identities.variant_report(ctx, cfg.Nmax, cfg.Smax, cfg.Tmax,
                                      policy=policy, ids=contested)
    summ = identities.suite_summary(recs)
    summ_line = {"summary": {
        "records": len(recs),
        "gating_failures": sum(1 for r in recs
                               if r.gating and r.skipped is None and not r.passed),
        "skipped": sum(1 for r in recs if r.skipped is not None),
        "all_gating_pass": summ["all_gating_pass"]},
        "adjudication": adjud}

    if cfg.format == "json":
        out_lines = [json.dumps(r.to_json_dict(cfg.precision)) for r in recs]
        out_lines.append(json.dumps(summ_line))
        text = "\n".join(out_lines) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["id", "n", "s", "t", "residual_abs", "residual_rel",
                    "pass", "mode", "skipped"])
        for r in recs:
            d = r.to_json_dict(cfg.precision)
            w.writerow([d["id"], d["n"], d["s"], d["t"],
                        d.get("residual_abs", ""), d.get("residual_rel", ""),
                        d["pass"], d["mode"], d.get("skipped", "")])
        text = buf.getvalue()
        _diag(json.dumps(summ_line))
    _emit(text, cfg.out)
    verdict = "PASS" if summ_line["summary"]["all_gating_pass"] else "FAIL"
    _diag("verify: %s (%d records, %d gating failures, %d skipped)"
          % (verdict, len(recs), summ_line["summary"]["gating_failures"],
             summ_line["summary"]["skipped"]))
    return EXIT_OK if summ_line["summary"]["all_gating_pass"] else EXIT_VERIFY


# ---- polys ----

def cmd_polys(cfg):
    K = cfg.Nmax + cfg.Smax + 3
    table = _build_table(cfg.mode, K, cfg.seed, cfg.Tmax, cfg.precision,
                         cfg.guard, cfg.quad_level)
    ctx = detkit.DetContext(table)
    rows = []
    for fam in ("P", "Q", "R"):
        for n in range(0 if fam != "R" else 1, cfg.Nmax + 1):
            for s in range(cfg.Smax + 1):
                for t in range(cfg.Tmax + 1):
                    try:
                        pc = polyfam.poly(ctx, fam, n, s, t)
                    except (DegeneracyError, ExtentError) as exc:
                        rows.append({"family": fam, "n": n, "s": s, "t": t,
                                     "skipped": str(exc)})
                        continue
                    rows.append({"family": fam, "n": n, "s": s, "t": t,
                                 "coeffs": [fmt_scalar(c, cfg.precision)
                                            for c in pc.coeffs]})
    if cfg.format == "json":
        text = "\n".join(json.dumps(r) for r in rows) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["family", "n", "s", "t", "k", "coeff"])
        for r in rows:
            for k, c in enumerate(r.get("coeffs", [])):
                w.writerow([r["family"], r["n"], r["s"], r["t"], k, c])
        text = buf.getvalue()
    _emit(text, cfg.out)
    _diag("polys: %d polynomials (%s mode)" % (len(rows), cfg.mode))
    return EXIT_OK


# ---- lax ----

def cmd_lax(cfg):
    if cfg.format == "csv":
        raise ConfigError("lax report is a nested document; only json")
    Kop = cfg.Nmax + 1
    if Kop < 5:
        raise ConfigError("lax needs --n >= 4 (operator truncation K = n+1 >= 5)")
    K = Kop + cfg.Smax + 4
    table = _build_table(cfg.mode, K, cfg.seed, cfg.Tmax + 1, cfg.precision,
                         cfg.guard, cfg.quad_level)
    ctx = detkit.DetContext(table)
    policy = cfg.policy()
    doc = {"meta": {"mode": cfg.mode, "K": Kop,
                    "ranges": {"Smax": cfg.Smax, "Tmax": cfg.Tmax},
                    "precision": None if ctx.exact else cfg.precision},
           "sites": []}
    for s in range(cfg.Smax + 1):
        for t in range(cfg.Tmax + 1):
            entry = {"s": s, "t": t}
            try:
                comp = lax.compat_residuals(ctx, Kop, s, t)
                entry["compat"] = {
                    k: (v if v is None or isinstance(v, str)
                        else fmt_scalar(v, identities.REPORT_DIGITS))
                    for k, v in comp.items() if k.startswith("compat")}
            except (DegeneracyError, ExtentError) as exc:
                entry["compat"] = {"skipped": str(exc)}
            try:
                eig = lax.eigen_residuals(ctx, Kop, s, t)
                entry["eigen"] = {k: fmt_scalar(v, identities.REPORT_DIGITS)
                                  for k, v in eig.items() if k != "K"}
            except (DegeneracyError, ExtentError) as exc:
                entry["eigen"] = {"skipped": str(exc)}
            doc["sites"].append(entry)
    doc["six_equations"] = lax.verify_six_equations(ctx, cfg.Nmax, 0, 0,
                                                    policy=policy)
    _emit(json.dumps(doc, indent=1) + "\n", cfg.out)
    chosen = {eq: e["chosen"] for eq, e in doc["six_equations"]["equations"].items()}
    bad = [eq for eq, ch in chosen.items() if ch is None
           and cfg.mode == "jacobi-float"]
    _diag("lax: six-equation chosen variants %s" % chosen)
    return EXIT_VERIFY if bad else EXIT_OK


# ---- entry ----

COMMANDS = {"selfcheck": cmd_selfcheck, "lattice": cmd_lattice,
            "verify": cmd_verify, "polys": cmd_polys, "lax": cmd_lax}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        _diag("config error: %s" % exc)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        _diag("config error: %s" % exc)
        return EXIT_USAGE
    except ExtentError as exc:
        _diag("extent error (table too small for the request): %s" % exc)
        return EXIT_USAGE
    except (DegeneracyError, ArithmeticError) as exc:
        _diag("verification failure: %s" % exc)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())

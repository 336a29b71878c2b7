"""Tanh-sinh quadrature on (0,1) and the moment integrals of the weight
x^s (1-x)^t (1+x)^-t.

Singles and phi-moments are one-dimensional double-exponential sums.  Bimoments
m_{ij} = int int x^{s+i} y^{s+j} w(x)w(y)/(x+y) use one outer double-exponential
sum with the inner x-integral evaluated exactly per node: I_0(y) in closed form
(partial fractions for y <= 1/2, a positive-term Taylor series around y = 1
otherwise) followed by the power ladder I_{c+1}(y) = mu_c - y I_c(y).  A naive
nested rule is kept as a low-precision cross-check (method="nested-de").

All nodes are cached per (dps, level); level L uses step 2^-L and reuses every
level L-1 node, so level-doubling convergence costs only the new odd nodes.
"""

from dataclasses import dataclass
from math import comb

import mpmath as mp

from .numerics import ConfigError

# ---- Configuration ----

@dataclass(frozen=True)
class QuadratureConfig:
    """Level-doubling control. level is the starting refinement, >= 3."""
    level: int = 6
    max_level: int = 12
    target_digits: int = 110

    def __post_init__(self):
        if self.level < 3:
            raise ConfigError("quadrature level must be >= 3")
        if self.max_level < self.level:
            raise ConfigError("max_level must be >= level")


def config_for(policy, level=None):
    """Default config for a tolerance policy: target precision minus 10 digits."""
    return QuadratureConfig(level=level if level else 6,
                            max_level=13,
                            target_digits=policy.precision_digits - 10)


# ---- Node cache ----

_node_cache = {}   # (dps, level) -> list of (x, 1-x, weight) for NEW nodes of that level


def _nodes(dps, level, base_level):
    """Nodes added at `level` relative to level-1 (all nodes when level == base_level)."""
    key = (dps, level, level == base_level)
    got = _node_cache.get(key)
    if got is not None:
        return got
    with mp.workdps(dps):
        h = mp.mpf(2) ** (-level)
        umax = mp.asinh(mp.ln(10) * (dps + 6) / mp.pi)
        kmax = int(mp.floor(umax / h)) + 1
        if level == base_level:
            ks = range(-kmax, kmax + 1)
        else:
            ks = [k for k in range(-kmax, kmax + 1) if k % 2 != 0]
        out = []
        half_pi = mp.pi / 2
        for k in ks:
            u = k * h
            g = half_pi * mp.sinh(u)
            eg = mp.exp(-2 * g)
            x = 1 / (1 + eg)
            omx = eg / (1 + eg)
            w = mp.pi * mp.cosh(u) / (4 * mp.cosh(g) ** 2)
            if w == 0:
                continue
            out.append((x, omx, w))
    _node_cache[key] = out
    return out


# ---- Generic level-doubling integration ----

def integrate_01(f, cfg, dps):
    """int_0^1 f(x) dx; f(x, one_minus_x) -> mpf. Returns (value, level_used)."""
    with mp.workdps(dps):
        tol = mp.mpf(10) ** (-cfg.target_digits)
        total = mp.mpf(0)
        h = mp.mpf(2) ** (-cfg.level)
        prev = None
        level = cfg.level
        while True:
            new = mp.mpf(0)
            for x, omx, w in _nodes(dps, level, cfg.level):
                new += f(x, omx) * w
            total = (total / 2 if level > cfg.level else total) + h * new
            if prev is not None and abs(total - prev) <= tol * max(mp.mpf(1), abs(total)):
                return total, level
            if level >= cfg.max_level:
                return total, level
            prev = total
            level += 1
            h /= 2


def de_calibration(dps, levels):
    """Digits of agreement with ln2 for int dx/(1+x) at fixed levels (no doubling)."""
    out = {}
    with mp.workdps(dps):
        truth = mp.ln(2)
        for lv in levels:
            h = mp.mpf(2) ** (-lv)
            s = mp.mpf(0)
            for x, omx, w in _nodes(dps, lv, lv):
                s += w / (1 + x)
            s *= h
            err = abs(s - truth)
            out[lv] = float(mp.inf if err == 0 else -mp.log10(err / truth))
    return out


# ---- Weight helpers ----

def _wbar(x, omx, t):
    # ((1-x)/(1+x))^t with the accurate 1-x
    if t == 0:
        return mp.mpf(1)
    return (omx / (1 + x)) ** t


# ---- Single and phi moments (one pass per vector) ----

def single_vector(count, s, t, cfg, dps):
    """[u_i^{s,t}]_{i<count}, u_i = int x^{s+i} ((1-x)/(1+x))^t dx."""
    with mp.workdps(dps):
        tol = mp.mpf(10) ** (-cfg.target_digits)
        acc = [mp.mpf(0)] * count
        h = mp.mpf(2) ** (-cfg.level)
        level = cfg.level
        prev = None
        while True:
            new = [mp.mpf(0)] * count
            for x, omx, w in _nodes(dps, level, cfg.level):
                base = w * _wbar(x, omx, t) * x ** s
                for i in range(count):
                    new[i] += base
                    base *= x
            if level > cfg.level:
                acc = [a / 2 + h * v for a, v in zip(acc, new)]
            else:
                acc = [h * v for v in new]
            if prev is not None:
                delta = max(abs(a - p) / max(mp.mpf(1), abs(a)) for a, p in zip(acc, prev))
                if delta <= tol or level >= cfg.max_level:
                    return acc
            if level >= cfg.max_level:
                return acc
            prev = list(acc)
            level += 1
            h /= 2


def phi_vector(count, s, t, cfg, dps):
    """[phi_i^{s,t}]_{i<count}, phi_i = sqrt2 int x^{s+i}/(1+x) ((1-x)/(1+x))^t dx."""
    with mp.workdps(dps):
        tol = mp.mpf(10) ** (-cfg.target_digits)
        acc = [mp.mpf(0)] * count
        h = mp.mpf(2) ** (-cfg.level)
        level = cfg.level
        prev = None
        while True:
            new = [mp.mpf(0)] * count
            for x, omx, w in _nodes(dps, level, cfg.level):
                base = w * _wbar(x, omx, t) * x ** s / (1 + x)
                for i in range(count):
                    new[i] += base
                    base *= x
            if level > cfg.level:
                acc = [a / 2 + h * v for a, v in zip(acc, new)]
            else:
                acc = [h * v for v in new]
            if prev is not None:
                delta = max(abs(a - p) / max(mp.mpf(1), abs(a)) for a, p in zip(acc, prev))
                if delta <= tol or level >= cfg.max_level:
                    break
            if level >= cfg.max_level:
                break
            prev = list(acc)
            level += 1
            h /= 2
        r = mp.sqrt(2)
        return [r * a for a in acc]


# ---- Exact inner integral I_c(y) = int_0^1 x^c ((1-x)/(1+x))^t / (x+y) dx ----

_J_cache = {}   # (t, dps) -> list of J_k (k index from 0 unused, 1..)


def _J_table(t, dps):
    """J_k = int_0^1 ((1-x)/(1+x))^t (1+x)^-k dx, exact up to one ln2."""
    key = (t, dps)
    got = _J_cache.get(key)
    if got is not None:
        return got
    with mp.workdps(dps):
        kmax = int((dps + 10) * mp.ln(10) / mp.ln(2)) + 12
        # V[a][m] = int x^a (1+x)^-m dx, rows a = 0..t, m = 0..t+kmax
        mtop = t + kmax + 1
        V0 = [mp.mpf(0)] * (mtop + 1)
        V0[0] = mp.mpf(1)
        V0[1] = mp.ln(2)
        for m in range(2, mtop + 1):
            V0[m] = (1 - mp.mpf(2) ** (1 - m)) / (m - 1)
        rows = [V0]
        for a in range(1, t + 1):
            prevrow = rows[-1]
            row = [mp.mpf(0)] * (mtop + 1)
            row[0] = mp.mpf(1) / (a + 1)
            for m in range(1, mtop + 1):
                row[m] = prevrow[m - 1] - prevrow[m]
            rows.append(row)
        J = [mp.mpf(0)] * (kmax + 1)
        for k in range(1, kmax + 1):
            acc = mp.mpf(0)
            for a in range(t + 1):
                term = rows[a][t + k] * comb(t, a)
                acc += term if a % 2 == 0 else -term
            J[k] = acc
    _J_cache[key] = J
    return J


def _inner_I0(y, omy, t, dps, J):
    """Closed-form I_0(y); omy = 1-y supplied for accuracy near y = 1."""
    if y <= mp.mpf(1) / 2:
        c = omy
        A = ((1 + y) / c) ** t
        total = A * mp.ln((1 + y) / y)
        for k in range(1, t + 1):
            B = mp.mpf(0)
            for j in range(t - k + 1):
                term = comb(t, j) * mp.mpf(2) ** (t - j) * c ** (j - (t - k) - 1)
                B += -term if j % 2 == 0 else term
            Ek = mp.ln(2) if k == 1 else (1 - mp.mpf(2) ** (1 - k)) / (k - 1)
            total += B * Ek
        return total
    # series around y = 1: I_0 = sum_m (1-y)^m J_{m+1}, all terms positive
    tol = mp.mpf(10) ** (-(dps + 2))
    total = mp.mpf(0)
    p = mp.mpf(1)
    for m in range(len(J) - 1):
        term = p * J[m + 1]
        total += term
        if term < tol * total:
            break
        p *= omy
    return total


def _inner_ladder(y, omy, t, cmax, dps, J, mu):
    """[I_c(y)]_{c<=cmax} via I_{c+1} = mu_c - y I_c."""
    out = [mp.mpf(0)] * (cmax + 1)
    out[0] = _inner_I0(y, omy, t, dps, J)
    for c in range(cmax):
        out[c + 1] = mu[c] - y * out[c]
    return out


# ---- Bimoment table ----

def bimoment_table(K, s, t, cfg, dps, method="ladder-de"):
    """K x K table of m_{ij}^{s,t}; method "ladder-de" (default) or "nested-de"."""
    if method == "nested-de":
        return [[bimoment_nested(i, j, s, t, cfg, dps) for j in range(K)] for i in range(K)]
    if method != "ladder-de":
        raise ConfigError("unknown bimoment method: %r" % (method,))
    cmax = s + K - 1
    with mp.workdps(dps):
        J = _J_table(t, dps)
        mu = single_vector(max(cmax, 1), 0, t, cfg, dps)
        tol = mp.mpf(10) ** (-cfg.target_digits)
        acc = [[mp.mpf(0)] * K for _ in range(K)]
        h = mp.mpf(2) ** (-cfg.level)
        level = cfg.level
        prev_probe = None
        while True:
            new = [[mp.mpf(0)] * K for _ in range(K)]
            for y, omy, w in _nodes(dps, level, cfg.level):
                ivec = _inner_ladder(y, omy, t, cmax, dps, J, mu)
                o = w * _wbar(y, omy, t) * y ** s
                col = [mp.mpf(0)] * K
                for j in range(K):
                    col[j] = o
                    o *= y
                for i in range(K):
                    row = new[i]
                    ic = ivec[s + i]
                    for j in range(K):
                        row[j] += ic * col[j]
            if level > cfg.level:
                for i in range(K):
                    acc[i] = [a / 2 + h * v for a, v in zip(acc[i], new[i])]
            else:
                for i in range(K):
                    acc[i] = [h * v for v in new[i]]
            probe = (acc[0][0], acc[K - 1][K - 1])
            if prev_probe is not None:
                delta = max(abs(a - p) / max(mp.mpf(1), abs(a))
                            for a, p in zip(probe, prev_probe))
                if delta <= tol or level >= cfg.max_level:
                    return acc
            if level >= cfg.max_level:
                return acc
            prev_probe = probe
            level += 1
            h /= 2


def bimoment_entry(i, j, s, t, cfg, dps):
    """Single m_{ij}^{s,t} by the outer-DE / exact-inner-ladder path."""
    cmax = s + i
    with mp.workdps(dps):
        J = _J_table(t, dps)
        mu = single_vector(max(cmax, 1), 0, t, cfg, dps)

        def f(y, omy):
            ivec = _inner_ladder(y, omy, t, cmax, dps, J, mu)
            return ivec[cmax] * _wbar(y, omy, t) * y ** (s + j)

        val, _ = integrate_01(f, cfg, dps)
        return val


def bimoment_nested(i, j, s, t, cfg, dps):
    """Reference nested double-exponential rule; intended for low precision only."""
    inner_cfg = QuadratureConfig(level=cfg.level, max_level=min(cfg.max_level, 9),
                                 target_digits=cfg.target_digits)

    def outer(y, omy):
        wy = _wbar(y, omy, t) * y ** (s + j)
        val, _ = integrate_01(
            lambda x, omx: x ** (s + i) * _wbar(x, omx, t) / (x + y),
            inner_cfg, dps)
        return wy * val

    val, _ = integrate_01(outer, inner_cfg, dps)
    return val

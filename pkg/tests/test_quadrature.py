"""Quadrature engine: node rule, moment integrals, oracle agreement.

Oracles are recomputed closed forms, never frozen decimals:
  u_0^{0,0} = 1, u_1^{0,0} = 1/2, phi_0^{0,0} = sqrt2 ln2, m_00^{0,0} = 2 ln2,
  u_0^{0,1} = 2 ln2 - 1, phi_1^{0,0} = sqrt2 (1 - ln2).
"""

import mpmath as mp
import pytest

from dckp.numerics import ConfigError, TolerancePolicy, digits_of_agreement
from dckp import quadrature

PREC = 80
POL = TolerancePolicy(precision_digits=PREC, guard_digits=20)
CFG = quadrature.config_for(POL)
DPS = POL.working_dps


def _agree(value, closed_form_fn, need=PREC - 10):
    with mp.workdps(DPS):
        d = digits_of_agreement(value, closed_form_fn())
    assert d >= need, d


# ---- Configuration ----

def test_config_validation():
    with pytest.raises(ConfigError):
        quadrature.QuadratureConfig(level=2)
    with pytest.raises(ConfigError):
        quadrature.QuadratureConfig(level=6, max_level=5)
    assert quadrature.config_for(POL).target_digits == PREC - 10


def test_de_calibration_improves_with_level():
    # below the precision ceiling each level roughly doubles the digit count
    cal = quadrature.de_calibration(120, [3, 4, 5])
    assert cal[3] + 15 < cal[4]
    assert cal[4] + 15 < cal[5]
    assert cal[5] > 90


# ---- One-dimensional moments ----

def test_single_vector_closed_forms():
    with mp.workdps(DPS):
        u = quadrature.single_vector(3, 0, 0, CFG, DPS)
    _agree(u[0], lambda: mp.mpf(1))
    _agree(u[1], lambda: mp.mpf(1) / 2)
    _agree(u[2], lambda: mp.mpf(1) / 3)
    with mp.workdps(DPS):
        u1 = quadrature.single_vector(1, 0, 1, CFG, DPS)
    _agree(u1[0], lambda: 2 * mp.ln(2) - 1)


def test_phi_vector_closed_forms():
    with mp.workdps(DPS):
        ph = quadrature.phi_vector(2, 0, 0, CFG, DPS)
    _agree(ph[0], lambda: mp.sqrt(2) * mp.ln(2))
    _agree(ph[1], lambda: mp.sqrt(2) * (1 - mp.ln(2)))


def test_integrate_01_smooth_full_target():
    # polynomial integrand reaches the configured target
    with mp.workdps(DPS):
        val, level = quadrature.integrate_01(
            lambda x, omx: 3 * x * x, CFG, DPS)
    _agree(val, lambda: mp.mpf(1))
    assert level <= CFG.max_level


def test_integrate_01_endpoint_singularity():
    # int_0^1 dx/sqrt(1-x) = 2; the omx argument keeps the node accurate, but
    # the truncated tail beyond omx ~ 10^-dps still contributes ~10^-(dps/2),
    # so an inverse-sqrt singularity is only good to about half the digits
    with mp.workdps(DPS):
        val, level = quadrature.integrate_01(
            lambda x, omx: 1 / mp.sqrt(omx), CFG, DPS)
    _agree(val, lambda: mp.mpf(2), need=DPS // 2 - 8)
    assert level <= CFG.max_level


# ---- Bimoments ----

def test_bimoment_m00_vs_2ln2_both_methods():
    with mp.workdps(DPS):
        fast = quadrature.bimoment_entry(0, 0, 0, 0, CFG, DPS)
    _agree(fast, lambda: 2 * mp.ln(2))
    low = TolerancePolicy(precision_digits=25, guard_digits=8)
    lcfg = quadrature.config_for(low)
    with mp.workdps(low.working_dps):
        ref = quadrature.bimoment_nested(0, 0, 0, 0, lcfg, low.working_dps)
        d = digits_of_agreement(ref, 2 * mp.ln(2))
    assert d >= 15


def test_bimoment_nested_agrees_with_ladder_at_shifted_site():
    low = TolerancePolicy(precision_digits=25, guard_digits=8)
    lcfg = quadrature.config_for(low)
    dps = low.working_dps
    with mp.workdps(dps):
        a = quadrature.bimoment_nested(1, 2, 1, 1, lcfg, dps)
        b = quadrature.bimoment_entry(1, 2, 1, 1, lcfg, dps)
        d = digits_of_agreement(a, b)
    assert d >= 13


def test_bimoment_table_antidiagonal_identity():
    K = 5
    with mp.workdps(DPS):
        bm = quadrature.bimoment_table(K, 0, 1, CFG, DPS)
        uv = quadrature.single_vector(K, 0, 1, CFG, DPS)
        worst = min(digits_of_agreement(bm[i + 1][j] + bm[i][j + 1],
                                        uv[i] * uv[j])
                    for i in range(K - 1) for j in range(K - 1))
    assert worst >= PREC - 10


def test_bimoment_table_unknown_method():
    with pytest.raises(ConfigError):
        quadrature.bimoment_table(2, 0, 0, CFG, DPS, method="simpson")


# ---- Exact inner-integral machinery ----

def test_J_table_closed_forms():
    # t = 0: J_k = int (1+x)^-k; J_1 = ln2, J_2 = 1/2
    with mp.workdps(DPS):
        J = quadrature._J_table(0, DPS)
    _agree(J[1], lambda: mp.ln(2))
    _agree(J[2], lambda: mp.mpf(1) / 2)


def test_inner_I0_branches_agree():
    # partial-fraction branch (y <= 1/2) and Taylor branch (y > 1/2) must meet
    with mp.workdps(DPS):
        J = quadrature._J_table(2, DPS)
        lo = quadrature._inner_I0(mp.mpf("0.5"), mp.mpf("0.5"), 2, DPS, J)
        hi = quadrature._inner_I0(mp.mpf("0.5000000001"),
                                  mp.mpf("0.4999999999"), 2, DPS, J)
        d = digits_of_agreement(lo, hi)
    assert d >= 8

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfsl.analytic import (Axis, contour_grid, fixed_varactor, geq, il_closed_db, il_from_rs_db, il_ss,
                           performance, pmax_approx, pth_approx, pth_full, pth_resonant,
                           rp_from_ztx, rs_approx, rs_exact, rs_rd, zin_resonant)
from pfsl.core import AnalyticLosses, DesignPoint, ImpedanceSet, VaractorModel, capacitance_at_bias
from pfsl.errors import DomainError, SingularImpedanceError
from pfsl.units import w_to_dbm

from . import reference as ref

DP = DesignPoint(z0=ref.Z0, f_in_opt=ref.F_IN)
DV = fixed_varactor(ref.C_V, ref.DELTA, q_v=ref.Q_V, v_dc=ref.V_DC, v_bi=ref.V_BI)


def test_fixed_varactor_is_pinned():
    assert DV.c_v == ref.C_V and DV.delta == ref.DELTA
    assert DV.model.q_v == ref.Q_V and DV.model.v_bi == ref.V_BI


def test_geq_examples():
    assert geq(0, 2 + 1j, 3) == (2 + 1j) * 3
    assert geq(1 + 0j, 2 + 0j, 3 + 0j) == 11 + 0j
    # (-10j)(5) + 10j(5 - 10j) = -50j + 50j + 100
    assert geq(10j, -10j, 5) == pytest.approx(100 + 0j)


def test_pth_approx_anchor():
    p = pth_approx(DV, DP, ref.Z_TX)
    assert p == pytest.approx(ref.PTH_W, rel=1e-12)
    assert w_to_dbm(p) == pytest.approx(-4.8, abs=0.1)


def test_pth_approx_second_example():
    dv = fixed_varactor(0.5e-12, ref.DELTA)
    assert pth_approx(dv, DP, 50.0) == pytest.approx(ref.PTH_05P_50_W, rel=1e-12)


def test_pth_quarters_when_delta_doubles():
    assert pth_approx(fixed_varactor(ref.C_V, 0.8), DP, 31) == pytest.approx(ref.PTH_W / 4, rel=1e-12)


def test_pth_resonant_examples():
    dv = DV
    p = pth_resonant(AnalyticLosses(2.526, 2.526, 41.0), dv, DP)
    assert p == pytest.approx(ref.PTH_RESONANT_41, rel=1e-12)
    p2 = pth_resonant(AnalyticLosses(2.526, 2.526, 82.0), dv, DP)
    assert p2 == pytest.approx(4 * p, rel=1e-12)


def test_rp_from_ztx():
    assert rp_from_ztx(2.526, 31, 50) == pytest.approx(40.966, rel=1e-12)
    assert rp_from_ztx(3.0, 0, 50) == 3.0
    assert rp_from_ztx(0, 50, 50) == 100.0
    with pytest.raises(DomainError):
        rp_from_ztx(-1, 1, 1)


def test_series_losses():
    assert rs_approx(DV, DP) == pytest.approx(ref.RS, rel=1e-12)
    assert rs_exact(DV, DP) == pytest.approx(ref.RS, rel=1e-12)  # q_l = inf
    dp = DesignPoint(z0=50, f_in_opt=ref.F_IN, q_l=ref.Q_V)
    assert rs_exact(DV, dp) == pytest.approx(2 * rs_approx(DV, dp), rel=1e-14)
    dv2 = fixed_varactor(2 * ref.C_V, ref.DELTA)
    assert rs_approx(dv2, DP) == pytest.approx(ref.RS / 2, rel=1e-14)
    losses = rs_rd(DV, DP, 31)
    assert losses.r_s == losses.r_d
    assert losses.r_p == pytest.approx(rp_from_ztx(losses.r_s, 31, 50))


def test_zin_resonant():
    assert zin_resonant(2.526, 31) == pytest.approx(ref.ZIN_2526, rel=1e-12)
    assert zin_resonant(0.0, 31) == math.inf
    assert zin_resonant(31.0, 31.0) == 31.0
    assert zin_resonant(AnalyticLosses(2.526, 2.526, 41), 31) == pytest.approx(ref.ZIN_2526)


def test_insertion_loss_paths():
    assert il_closed_db(DV, DP, ref.Z_TX) == pytest.approx(ref.IL_DB, rel=1e-12)
    ratio, db = il_ss(380.4, 50)
    assert db == pytest.approx(ref.IL_ZIN_3804, rel=1e-12)
    assert 10 * math.log10(ratio) == pytest.approx(db, rel=1e-12)
    assert il_from_rs_db(0.0, 31, 50) == 0.0
    assert il_ss(math.inf, 50) == (1.0, 0.0)
    with pytest.raises(SingularImpedanceError):
        il_ss(0, 50)
    with pytest.raises(SingularImpedanceError):
        il_ss(-25.0, 50)


def test_pmax_examples():
    assert pmax_approx(DV, DP, ref.Z_TX) == pytest.approx(ref.PMAX_W, rel=1e-12)
    dv0 = fixed_varactor(ref.C_V, ref.DELTA, v_dc=0.0)
    assert pmax_approx(dv0, DP, ref.Z_TX) == pytest.approx(ref.PMAX_VDC0_W, rel=1e-12)
    # doubling V_DC + V_bi: 1.1 + 0.7 -> 2.9 + 0.7
    dv2 = fixed_varactor(ref.C_V, ref.DELTA, v_dc=2.9)
    assert pmax_approx(dv2, DP, ref.Z_TX) == pytest.approx(4 * ref.PMAX_W, rel=1e-12)


def test_performance_bundle():
    m = performance(DV, DP, ref.Z_TX)
    assert m.p_th == pytest.approx(ref.PTH_W)
    assert m.il_ss_db == pytest.approx(ref.IL_DB)
    assert m.v_th == pytest.approx(math.sqrt(8 * 50 * ref.PTH_W))
    assert m.p_max > m.p_th


def _resonant_set(dv, dp, z_tx):
    """Branch impedances that satisfy all four resonance conditions exactly."""
    losses = rs_rd(dv, dp, z_tx, exact=False)
    x = 37.0  # arbitrary reactance, cancelled by construction
    z3_in = complex(losses.r_s, x)
    z1_in = complex(losses.r_p - losses.r_s, -x)
    z3_d = complex(losses.r_d, 2 * x)
    z2_d = complex(0.0, -2 * x)
    # parallel tanks: Z2 open at w_in, Z1 open at w_d
    big = 1e12
    return ImpedanceSet(z1_in=z1_in, z2_in=complex(0, big), z3_in=z3_in, z1_d=complex(0, big),
                        z2_d=z2_d, z3_d=z3_d, z_in=complex(z_tx**2 / losses.r_s, 0)), losses


def test_pth_full_reduces_to_resonant_form():
    imps, losses = _resonant_set(DV, DP, ref.Z_TX)
    p_full, v_th = pth_full(imps, DV, DP)
    assert p_full == pytest.approx(pth_resonant(losses, DV, DP), rel=1e-6)
    assert v_th == pytest.approx(math.sqrt(8 * 50 * p_full))
    p_half, _ = pth_full(imps, fixed_varactor(ref.C_V, 2 * ref.DELTA), DP)
    assert p_half == pytest.approx(p_full / 4, rel=1e-12)


def test_pth_full_singular():
    with pytest.raises(SingularImpedanceError):
        pth_full(ImpedanceSet(1, 1, 1, 1, -1, 1, 1), DV, DP)


cv = st.floats(0.05e-12, 10e-12)
delta = st.floats(0.05, 1.5)
ztx = st.floats(2.0, 200.0)


@given(cv, delta, ztx, st.floats(1.01, 3.0))
def test_pth_increases_in_cv_ztx_and_inverse_delta(c, d, z, k):
    p = pth_approx(fixed_varactor(c, d), DP, z)
    assert pth_approx(fixed_varactor(c * k, d), DP, z) > p
    assert pth_approx(fixed_varactor(c, d), DP, z * k) > p
    assert pth_approx(fixed_varactor(c, d / k), DP, z) > p


@given(cv, ztx, st.floats(2.0, 100.0), st.floats(1.01, 3.0))
def test_il_decreases_in_cv_qv_ztx(c, z, q, k):
    il = il_closed_db(fixed_varactor(c, 0.4, q_v=q), DP, z)
    assert il_closed_db(fixed_varactor(c * k, 0.4, q_v=q), DP, z) < il
    assert il_closed_db(fixed_varactor(c, 0.4, q_v=q * k), DP, z) < il
    assert il_closed_db(fixed_varactor(c, 0.4, q_v=q), DP, z * k) < il


@given(st.floats(0.0, 10.0), st.floats(0.01, 3.0))
def test_pmax_increases_with_headroom(v, dv):
    a = pmax_approx(fixed_varactor(2e-12, 0.4, v_dc=v), DP, 31)
    b = pmax_approx(fixed_varactor(2e-12, 0.4, v_dc=v + dv), DP, 31)
    assert b > a


@given(cv, delta, ztx, st.floats(10.0, 100.0), st.floats(1e8, 2e10))
def test_closed_forms_compose(c, d, z, z0, f):
    dv = fixed_varactor(c, d)
    dp = DesignPoint(z0=z0, f_in_opt=f)
    losses = rs_rd(dv, dp, z, exact=False)
    assert pth_resonant(losses, dv, dp) == pytest.approx(pth_approx(dv, dp, z), rel=1e-12)
    il = il_closed_db(dv, dp, z)
    assert il_ss(zin_resonant(losses, z), z0)[1] == pytest.approx(il, rel=1e-12)
    assert il_from_rs_db(losses.r_s, z, z0) == pytest.approx(il, rel=1e-12)


# --------------------------------------------------------------------------
# grids

CV_AX = Axis("c_v", 0.05e-12, 5e-12, 60)
ZT_AX = Axis("z_tx", 5.0, 100.0, 60)


def test_grid_shape_and_anchor_cell():
    g = contour_grid("p_th", CV_AX, ZT_AX, DV, DP)
    assert g.values.shape == (60, 60) and g.nan_count == 0
    assert len(list(g.rows())) == 3600
    x, y, v = g.nearest(2e-12, 31.0)
    assert v == pytest.approx(pth_approx(fixed_varactor(x, ref.DELTA), DP, y), rel=1e-12)


def test_single_cell_grid_equals_scalar():
    for metric, fn in (("p_th", pth_approx), ("p_max", pmax_approx), ("il_ss", il_closed_db)):
        g = contour_grid(metric, Axis("c_v", 2e-12, 2e-12, 1), Axis("z_tx", 31, 31, 1), DV, DP)
        assert g.values[0, 0] == pytest.approx(fn(DV, DP, 31.0), rel=1e-12)


def test_grid_equals_scalar_everywhere():
    g = contour_grid("il_ss", CV_AX, ZT_AX, DV, DP)
    rng = np.random.default_rng(3)
    for i, j in rng.integers(0, 60, size=(20, 2)):
        dv = fixed_varactor(g.x[i], ref.DELTA)
        assert g.values[i, j] == pytest.approx(il_closed_db(dv, DP, g.y[j]), rel=1e-12)


def test_tracked_bias_axis_follows_cv_law():
    m = VaractorModel()
    dv = capacitance_at_bias(m, 1.1)
    g = contour_grid("p_th", Axis("v_dc", 0.0, 20.0, 41), ZT_AX, dv, DP)
    assert g.nan_count == 11 * 60  # 15 V and above exceed breakdown
    i = int(np.argmin(np.abs(g.x - 2.0)))
    expect = pth_approx(capacitance_at_bias(m, g.x[i]), DP, g.y[7])
    assert g.values[i, 7] == pytest.approx(expect, rel=1e-12)


def test_fixed_cv_bias_axis_only_moves_headroom():
    g = contour_grid("p_max", ZT_AX, Axis("v_dc", 0.0, 5.0, 11), DV, DP, track_bias=False)
    j = 2  # 1.0 V
    expect = pmax_approx(fixed_varactor(ref.C_V, ref.DELTA, v_dc=1.0), DP, g.x[5])
    assert g.values[5, j] == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("args", [("bogus", CV_AX, ZT_AX), ("p_th", CV_AX, CV_AX)])
def test_grid_rejects_bad_requests(args):
    with pytest.raises(DomainError):
        contour_grid(*args, DV, DP)


def test_tracked_bias_cannot_sweep_cv():
    with pytest.raises(DomainError):
        contour_grid("p_th", CV_AX, Axis("v_dc", 0.0, 3.0, 5), DV, DP)


@pytest.mark.parametrize("kw", [dict(name="q", start=1, stop=2, steps=3),
                                dict(name="c_v", start=2, stop=1, steps=3),
                                dict(name="c_v", start=1, stop=2, steps=1),
                                dict(name="z_tx", start=0, stop=2, steps=3)])
def test_axis_validation(kw):
    with pytest.raises(DomainError):
        Axis(**kw)

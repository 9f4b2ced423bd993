import math

import pytest

from pfsl.analytic import pth_approx, pth_full
from pfsl.core import DesignPoint, VaractorModel, capacitance_at_bias
from pfsl.errors import DomainError
from pfsl.linear import driving_point_impedance
from pfsl.synthesis import (C_BLK, N_STAR, Z_A, Z_B, Z_C, SynthesizedNetwork, synthesize_network,
                            tank_capacitance)
from pfsl.units import w_to_dbm

from . import reference as ref


def test_tank_capacitance():
    assert tank_capacitance(6.8e-9, 2.1e9) == pytest.approx(ref.C_TANK_68N, rel=1e-12)


def test_prototype_tanks_resonate(proto):
    wd, wi = proto.design.omega_d, proto.design.omega_in
    assert proto.l_a * proto.c_a * wd**2 == pytest.approx(1.0, rel=1e-12)
    assert proto.l_b * proto.c_b * wi**2 == pytest.approx(1.0, rel=1e-12)
    assert proto.c_blk == C_BLK
    assert proto.transformer.l_t == pytest.approx(proto.z_tx / wi)


def _loop_residuals(sn):
    net = sn.netlist()
    f_in = sn.design.f_in_opt

    def z(excl, f):
        return driving_point_impedance(net, N_STAR, excl, f)

    s_in = z(Z_B + Z_C, f_in) + z(Z_A + Z_B, f_in)
    s_d = z(Z_A + Z_C, f_in / 2) + z(Z_A + Z_B, f_in / 2)
    return s_in, s_d


@pytest.mark.parametrize("z_tx,v_dc,l_a", [(31.0, 1.1, 11e-9), (20.0, 2.0, 8e-9), (45.0, 0.5, 14e-9)])
def test_series_loops_resonate(z_tx, v_dc, l_a):
    dv = capacitance_at_bias(VaractorModel(), v_dc)
    sn = synthesize_network(dv, DesignPoint(f_in_opt=2.1e9, q_l=500.0), z_tx, l_a)
    for s in _loop_residuals(sn):
        assert abs(s.imag) < 1e-3 * abs(s.real)
    assert sn.l_b > 0 and sn.l_c > 0


def test_cross_engine_threshold(proto):
    p_full, _ = pth_full(proto.impedance_set(), proto.varactor, proto.design)
    p7 = pth_approx(proto.varactor, proto.design, proto.z_tx)
    assert abs(w_to_dbm(p_full) - w_to_dbm(p7)) < 1.0


def test_input_impedance_close_to_transformed_loss(proto):
    imps = proto.impedance_set()
    dv, dp = proto.varactor, proto.design
    r_s = (1.0 / (dp.omega_in * dv.c_v)) * (1.0 / dp.q_l + 1.0 / dv.model.q_v)
    assert imps.z_in.real == pytest.approx(proto.z_tx**2 / r_s, rel=0.10)


def test_scaled_zb_keeps_resonance(proto):
    sn = proto.scaled_zb(0.95)
    assert sn.l_b == pytest.approx(0.95 * proto.l_b)
    assert sn.l_b * sn.c_b * sn.design.omega_in**2 == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        proto.scaled_zb(0.0)


def test_rebias_moves_only_the_varactor(proto):
    sn = proto.rebias(3.0)
    assert sn.varactor.v_dc == 3.0 and sn.varactor.c_v < proto.varactor.c_v
    assert (sn.l_a, sn.l_b, sn.l_c) == (proto.l_a, proto.l_b, proto.l_c)


def test_netlist_topology(proto):
    net = proto.netlist(p_in=1e-3)
    assert net.pag_source.value == pytest.approx(net.cw_sources[0].value / 2)
    assert net.pag_source.power == pytest.approx(1e-12)
    assert len(net.ports) == 2 and not net.floating_nodes()
    assert net.element("X1").varactor == proto.varactor


def test_rejects_bad_inputs(proto):
    with pytest.raises(DomainError):
        synthesize_network(proto.varactor, proto.design, 0.0, 11e-9)
    with pytest.raises(DomainError):
        synthesize_network(proto.varactor, proto.design, 31.0, -1.0)


def test_constructor_checks_tank_resonance(proto):
    import dataclasses
    with pytest.raises(DomainError):
        dataclasses.replace(proto, c_a=proto.c_a * 1.01)
    assert isinstance(proto, SynthesizedNetwork)
    assert math.isfinite(proto.residuals[0])

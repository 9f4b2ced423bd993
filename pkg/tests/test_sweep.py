import math

import numpy as np
import pytest

from pfsl.core import Element, Kind, Netlist, Port
from pfsl.errors import ConfigError, NoBifurcationError, TraceError
from pfsl.linear import sparams
from pfsl.sweep import (SweepRecord, SweepTrace, cascade_stages, extract_pmax, extract_pth, is_report,
                        power_sweep, sweep_frequency_at_power)
from pfsl.synthesis import prototype
from pfsl.units import dbm_to_w, w_to_dbm


def _through(f=2.1e9):
    return Netlist((Element("V1", Kind.CW_SOURCE, 1, 0, f, power=1e-3, z_src=50.0),
                    Element("L1", Kind.INDUCTOR, 1, 2, 3e-9, q=60.0, f_ref=f),
                    Element("C1", Kind.CAPACITOR, 2, 0, 0.5e-12)),
                   (Port(1), Port(2)))


def _record(p_dbm, p_sub, s21=0.9, v_peak=0.1, divided=False):
    return SweepRecord(dbm_to_w(p_dbm), complex(s21), 0j, p_sub, v_peak, 0.0, divided, True, 3, 0.0)


def _pad(net: Netlist, db: float) -> Netlist:
    """Insert a matched resistive pad between the last port node and its load."""
    k = 10 ** (db / 20)
    r1 = 50 * (k - 1) / (k + 1)
    r2 = 2 * 50 * k / (k * k - 1)
    out = net.ports[1].node
    new = max(net.nodes) + 1
    mid = new + 1
    els = [e.renamed(e.name, new, 0) if e.kind == Kind.PAG_SOURCE else e for e in net.elements]
    els += [Element("RPAD1", Kind.RESISTOR, out, mid, r1), Element("RPAD2", Kind.RESISTOR, mid, new, r1),
            Element("RPAD3", Kind.RESISTOR, mid, 0, r2)]
    return net.replace(elements=tuple(els), ports=(net.ports[0], Port(new, 0, net.ports[1].z0)))


@pytest.fixture(scope="module")
def linear_trace():
    return power_sweep(_through(), 2.1e9, dbm_to_w(-20.0), dbm_to_w(30.0), 2.0, require_pag=False)


def test_linear_sweep_is_flat(linear_trace):
    ss = sparams(_through(), 2.1e9)
    assert np.max(np.abs(linear_trace.s21_db - 20 * math.log10(abs(ss.s21)))) < 1e-6
    assert not linear_trace.divided.any()
    with pytest.raises(NoBifurcationError):
        extract_pth(linear_trace)


def test_linear_trace_has_no_suppression(proto, linear_trace):
    rep = is_report(linear_trace, proto.varactor)
    assert np.max(np.abs(rep.is_db)) < 1e-6
    assert math.isinf(rep.p_th) and math.isnan(rep.is_max_below_pmax)


def test_sub_harmonic_jumps_at_threshold(tuned_trace, tuned_pth):
    p = tuned_trace.p_in_dbm
    below = tuned_trace.p_sub[p < w_to_dbm(tuned_pth) - 1.0]
    above = tuned_trace.p_sub[(p > w_to_dbm(tuned_pth) + 1.0) & (p < w_to_dbm(tuned_pth) + 5.0)]
    assert w_to_dbm(above.min()) - w_to_dbm(max(below.max(), 1e-30)) > 30.0
    assert tuned_trace.all_converged


def test_threshold_interpolates_a_synthetic_step():
    tr = SweepTrace((_record(-10, 1e-15), _record(-9, 1e-15), _record(-8, 1e-6)))
    assert w_to_dbm(extract_pth(tr)) == pytest.approx(-9 + 60 / 90, abs=1e-9)
    assert extract_pth(SweepTrace((_record(-10, 1e-3), _record(-9, 1e-3)))) == pytest.approx(1e-4)


def test_trace_validation():
    with pytest.raises(TraceError):
        SweepTrace((_record(-9, 0.0), _record(-10, 0.0)))
    down = SweepTrace((_record(-9, 0.0), _record(-10, 0.0)), "down")
    with pytest.raises(TraceError):
        extract_pth(down)
    assert list(down.ascending().p_in_dbm) == pytest.approx([-10, -9])
    with pytest.raises(ConfigError):
        SweepTrace((), "sideways")
    with pytest.raises(ConfigError):
        power_sweep(_through(), 2.1e9, 1e-3, 1e-4, require_pag=False)


def test_threshold_is_refined_within_bracket(tuned_trace, tuned_pth):
    p = w_to_dbm(tuned_pth)
    i = int(np.nonzero(tuned_trace.p_sub > 1e-9)[0][0])
    assert tuned_trace.p_in_dbm[i - 1] <= p <= tuned_trace.p_in_dbm[i]
    coarse = extract_pth(tuned_trace, refine=False)
    assert abs(w_to_dbm(coarse) - p) <= 1.0


def test_pmax_sentinel_on_truncated_trace(tuned, tuned_trace):
    short = SweepTrace(tuned_trace.records[:12], metadata=tuned_trace.metadata)
    est = extract_pmax(short, tuned.varactor)
    assert math.isinf(est.p_max) and not est.criterion_met
    assert 0 < est.v_peak_max < est.level


def test_pmax_rises_with_bias(tuned, tuned_trace):
    # resynthesized at the new bias; rebias() alone would also detune the loops
    base = extract_pmax(tuned_trace, tuned.varactor)
    hi = prototype(v_dc=tuned.varactor.v_dc + 0.5).scaled_zb(0.95)
    tr = power_sweep(hi.netlist(), hi.design.f_in_opt, dbm_to_w(-10.0), dbm_to_w(28.0), 1.0)
    assert extract_pmax(tr, hi.varactor).p_max > base.p_max


def test_suppression_exceeds_8db_at_28dbm(tuned, tuned_trace):
    rep = is_report(tuned_trace, tuned.varactor)
    assert rep.is_at(dbm_to_w(28.0)) > 8.0


def test_output_pad_leaves_suppression_unchanged(tuned, tuned_trace):
    net = _pad(tuned.netlist(), 1.0)
    tr = power_sweep(net, tuned.design.f_in_opt, dbm_to_w(-10.0), dbm_to_w(28.0), 1.0)
    a = is_report(tuned_trace, tuned.varactor)
    b = is_report(tr, tuned.varactor)
    assert b.il_ss - a.il_ss == pytest.approx(1.0, abs=0.01)
    assert np.max(np.abs(a.is_db - b.is_db)) < 0.05


def test_down_sweep_agrees_away_from_threshold(tuned, tuned_trace, tuned_pth):
    down = power_sweep(tuned.netlist(), tuned.design.f_in_opt, dbm_to_w(-10.0), dbm_to_w(28.0), 1.0,
                       direction="down").ascending()
    assert np.allclose(down.p_in_dbm, tuned_trace.p_in_dbm)
    far = np.abs(tuned_trace.p_in_dbm - w_to_dbm(tuned_pth)) > 2.0
    assert np.max(np.abs(down.s21_db[far] - tuned_trace.s21_db[far])) < 0.5


def test_frequency_sweep_low_power_is_small_signal(tuned):
    fs = sweep_frequency_at_power(tuned.netlist(), 1.9e9, 2.3e9, 9, dbm_to_w(-20.0))
    assert fs.converged.all() and not fs.divided.any()
    assert np.max(np.abs(fs.suppression_db)) < 0.05


def test_notch_deepens_with_power(tuned):
    depths = [sweep_frequency_at_power(tuned.netlist(), 1.9e9, 2.3e9, 9, dbm_to_w(p)).notch_depth_db
              for p in (0.0, 6.0, 12.0)]
    assert depths[0] < depths[1] < depths[2]


def test_cascade_of_one_is_the_network(proto):
    net = proto.netlist()
    one = cascade_stages(net, 1)
    assert {e.name for e in one.elements} == {e.name for e in net.elements}
    a, b = sparams(net, 2.1e9), sparams(one, 2.1e9)
    assert np.allclose(a.matrix, b.matrix, atol=1e-12)


def test_cascade_of_two(proto):
    net = proto.netlist()
    two = cascade_stages(net, 2)
    assert len(two.elements) == 2 * len(net.elements) - 2
    assert len(two.cw_sources) == 1 and two.pag_source is not None
    assert two.pag_source.node_a == two.ports[1].node
    assert two.cw_sources[0].node_a == two.ports[0].node
    assert not two.floating_nodes()
    with pytest.raises(ConfigError):
        cascade_stages(net, 0)

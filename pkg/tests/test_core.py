import dataclasses
import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from pfsl.core import (CJ0_DEFAULT, AnalyticLosses, DesignPoint, Element, ImpedanceSet, Kind, Netlist,
                       Port, TransformerSpec, VaractorModel, capacitance_at_bias,
                       component_series_resistance)
from pfsl.errors import ConfigError, DomainError

from . import reference as ref


def test_design_point_angular_frequencies():
    dp = DesignPoint(f_in_opt=2.1e9)
    assert dp.omega_in == 2 * math.pi * 2.1e9
    assert dp.omega_d == dp.omega_in / 2


@pytest.mark.parametrize("kw", [{"z0": 0}, {"f_in_opt": -1}, {"q_l": 0}])
def test_design_point_rejects_nonpositive(kw):
    with pytest.raises(DomainError):
        DesignPoint(**kw)


def test_default_cj0_matches_derivation():
    assert CJ0_DEFAULT == pytest.approx(ref.CJ0_DEFAULT, rel=1e-14)


def test_default_model_gives_two_picofarads_at_bias():
    bv = capacitance_at_bias(VaractorModel(), 1.1)
    assert bv.c_v == pytest.approx(2.0e-12, rel=1e-12)
    assert bv.delta == pytest.approx(1.1 * 1.6 / (1.9 * 2.0), rel=1e-12)


def test_zero_bias_identity():
    m = VaractorModel(c_j0=3e-12, c_pkg=0.3e-12)
    assert capacitance_at_bias(m, 0.0).c_v == pytest.approx(3.3e-12, rel=1e-14)


def test_hand_evaluated_bias_point():
    m = VaractorModel(c_j0=2e-12, v_j=0.8, gamma=1.0, c_pkg=0.0)
    bv = capacitance_at_bias(m, 0.8)
    assert bv.c_v == pytest.approx(1.0e-12, rel=1e-14)
    assert bv.delta == pytest.approx(0.625, rel=1e-14)


@pytest.mark.parametrize("v", [-0.1, 15.0, 20.0])
def test_bias_out_of_range(v):
    with pytest.raises(DomainError):
        capacitance_at_bias(VaractorModel(), v)


def test_extreme_grading_exponent_is_a_domain_error():
    with pytest.raises(DomainError):
        capacitance_at_bias(VaractorModel(gamma=1621.0, c_pkg=0.0), 1.7)


models = st.builds(VaractorModel,
                   c_j0=st.floats(0.1e-12, 20e-12), v_j=st.floats(0.3, 1.5),
                   gamma=st.floats(0.3, 2.0), c_pkg=st.floats(0.0, 1e-12))


@given(models, st.floats(0.0, 10.0), st.floats(0.01, 3.0))
def test_junction_capacitance_decreases_with_bias(m, v, dv):
    assert m.junction_capacitance(v + dv) < m.junction_capacitance(v)


@given(models, st.floats(0.05, 10.0))
def test_delta_is_the_normalised_finite_difference(m, v):
    assume(m.gamma / (m.v_j + v) < 1.99)  # keeps delta inside its (0, 2) domain
    bv = capacitance_at_bias(m, v)
    h = 1e-5
    slope = (m.capacitance(v - h) - m.capacitance(v + h)) / (2 * h)
    assert bv.delta == pytest.approx(slope / bv.c_v, rel=1e-6)


def test_for_target_hits_capacitance():
    m = VaractorModel.for_target(1.3e-12, 2.5, gamma=0.9)
    assert capacitance_at_bias(m, 2.5).c_v == pytest.approx(1.3e-12, rel=1e-12)
    with pytest.raises(DomainError):
        VaractorModel.for_target(0.3e-12, 1.0)


def test_component_series_resistance():
    assert component_series_resistance("inductor", 6.8e-9, 80, 2.1e9) == pytest.approx(ref.R_L68_Q80, rel=1e-12)
    assert component_series_resistance("C", 1.4e-12, 100, 2.1e9) == pytest.approx(ref.R_C14_Q100, rel=1e-12)
    assert component_series_resistance("capacitor", 1e-12, math.inf, 1e9) == 0.0
    with pytest.raises(DomainError):
        component_series_resistance("resistor", 1.0, 1.0, 1.0)


def test_transformer_spec():
    t = TransformerSpec.at(31.0, 2 * math.pi * 2.1e9)
    assert math.sqrt(t.l_t / t.c_t) == pytest.approx(31.0, rel=1e-12)
    with pytest.raises(DomainError):
        TransformerSpec(31.0, 1e-9, 1e-12)


def test_impedance_set_must_be_finite():
    with pytest.raises(DomainError):
        ImpedanceSet(1, 1, 1, 1, 1, complex(math.inf, 0), 1)


def test_analytic_losses_ordering():
    AnalyticLosses(1.0, 1.0, 2.0)
    with pytest.raises(DomainError):
        AnalyticLosses(2.0, 1.0, 1.0)


def _source(name="V1", f=1e9, kind=Kind.CW_SOURCE):
    return Element(name, kind, 1, 0, f, power=1e-3, z_src=50.0)


def test_element_emf_from_available_power():
    assert _source().emf == pytest.approx(math.sqrt(8 * 50 * 1e-3))


def test_netlist_one_pag_at_half_frequency():
    r = Element("R1", Kind.RESISTOR, 1, 0, 50.0)
    Netlist((r, _source(), _source("A1", 0.5e9, Kind.PAG_SOURCE)), (Port(1),))
    with pytest.raises(ConfigError):
        Netlist((r, _source(), _source("A1", 0.4e9, Kind.PAG_SOURCE)), (Port(1),))
    with pytest.raises(ConfigError):
        Netlist((r, _source(), _source("A1", 0.5e9, Kind.PAG_SOURCE),
                 _source("A2", 0.5e9, Kind.PAG_SOURCE)), (Port(1),))


def test_netlist_needs_a_port_and_declared_port_nodes():
    r = Element("R1", Kind.RESISTOR, 1, 0, 50.0)
    with pytest.raises(ConfigError):
        Netlist((r,), ())
    with pytest.raises(ConfigError):
        Netlist((r,), (Port(5),))


def test_floating_nodes_flagged():
    els = (Element("C1", Kind.CAPACITOR, 1, 2, 1e-12), Element("R1", Kind.RESISTOR, 1, 0, 50.0))
    assert Netlist(els, (Port(1),)).floating_nodes() == {2}


def test_netlist_is_immutable_and_hashable_digest(proto):
    net = proto.netlist()
    with pytest.raises(dataclasses.FrozenInstanceError):
        net.title = "x"
    assert net.digest() == proto.netlist().digest()
    assert net.digest() != net.with_drive(p_in=1e-3).digest()

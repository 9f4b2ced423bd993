import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfsl.core import Kind, VaractorModel, capacitance_at_bias
from pfsl.errors import NetlistSyntaxError, PfslError
from pfsl.netlist_io import (parse_document, parse_netlist, parse_value, read_netlist, serialize_netlist,
                             structurally_equal, write_netlist)

from . import netgen
from . import reference as ref

SMV = (".vbias 1.1\n.fref 2.1g\n.model smv cj0={cj0} vj=0.8 gamma=1.1 cpkg=0.4p qv=15 vbi=0.7\n"
       "X1 3 0 model=smv\nR1 1 3 5\n.port 1 0 50\n")


@pytest.mark.parametrize("tok,val", [("11n", 11e-9), ("1.4p", 1.4e-12), ("2.1G", 2.1e9), ("3meg", 3e6),
                                     ("3MEGHZ", 3e6), ("5m", 5e-3), ("1e3k", 1e6), ("11nH", 11e-9),
                                     (".5u", 0.5e-6), ("inf", math.inf)])
def test_parse_value(tok, val):
    assert parse_value(tok) == pytest.approx(val, rel=1e-15)


def test_inductor_line():
    net = parse_netlist("V1 1 0 2.1g\nL1 1 2 11n Q=80\nR1 2 0 50\n.port 1 0 50\n")
    e = net.element("L1")
    assert e.kind is Kind.INDUCTOR and (e.node_a, e.node_b) == (1, 2)
    assert e.value == 11e-9 and e.q == 80.0 and e.f_ref == 2.1e9


def test_capacitor_roundtrip():
    net = parse_netlist("C1 2 0 1.4p\nR1 1 2 10\n.port 1 0 50\n")
    again = parse_netlist(serialize_netlist(net))
    assert structurally_equal(net, again)
    assert again.element("C1").value == 1.4e-12


def test_model_line_with_default_cj0():
    bv = parse_netlist(SMV.format(cj0=repr(ref.CJ0_DEFAULT))).element("X1").varactor
    assert bv.c_v == pytest.approx(2.0e-12, rel=1e-12)
    assert bv.v_dc == 1.1 and bv.model.q_v == 15.0


def test_model_line_with_235p_cj0():
    # the C-V law with cj0 = 2.35 pF lands at 1.31 pF, not 2.0 pF, at 1.1 V
    bv = parse_netlist(SMV.format(cj0="2.35p")).element("X1").varactor
    want = capacitance_at_bias(VaractorModel(c_j0=2.35e-12), 1.1).c_v
    assert bv.c_v == pytest.approx(want, rel=1e-12)
    assert bv.c_v == pytest.approx(1.307e-12, rel=1e-3)


@pytest.mark.parametrize("text,line,col,what", [
    ("R1 1 0 50\nQ1 1 0 5\n.port 1 0 50\n", 2, 1, "prefix"),
    ("R1 1 0 50\nR1 1 0 5\n.port 1 0 50\n", 2, 1, "duplicate"),
    ("R1 1 0 50\n.port 7 0 50\n", 2, 7, "node"),
    ("R1 1 0 5x0\n.port 1 0 50\n", 1, 8, "number"),
    ("R1 1 0 1e99999g\n.port 1 0 50\n", 1, 8, "range"),
    ("R1 1 0 50\nL1 1 0 1n Z=3\n.port 1 0 50\n", 2, 11, "key"),
])
def test_diagnostics_carry_position(text, line, col, what):
    with pytest.raises(NetlistSyntaxError) as info:
        parse_netlist(text)
    assert (info.value.line, info.value.column) == (line, col)
    assert what in str(info.value).lower()


def test_document_collects_diagnostics():
    doc = parse_document("Q1 1 0 5\nR1 1 0 5x\n.port 1 0 50\n")
    assert not doc.ok
    assert [d.line for d in doc.diagnostics] == [1, 2]
    assert str(doc.diagnostics[0]).startswith("line 1, col 1:")


def test_bytes_input():
    assert parse_netlist(b"R1 1 0 50 # load\n* note\n\n.port 1 0 50\n").element("R1").value == 50.0
    with pytest.raises(NetlistSyntaxError) as info:
        parse_netlist(b"R1 1 0 50\n\xff\n")
    assert info.value.line == 2


def test_file_roundtrip(proto, tmp_path):
    net = proto.netlist(p_in=1e-3)
    path = tmp_path / "p.net"
    write_netlist(net, path)
    assert structurally_equal(read_netlist(path), net)


def test_random_ladders_roundtrip():
    rng = np.random.default_rng(5)
    for _ in range(100):
        net = parse_netlist(netgen.random_netlist(rng))
        assert structurally_equal(parse_netlist(serialize_netlist(net)), net)


@given(st.binary(max_size=400))
def test_arbitrary_bytes_never_crash(data):
    try:
        parse_netlist(data)
    except PfslError:
        pass


@given(st.integers(0, 2**32 - 1))
def test_mutated_netlists_never_crash(seed):
    text = netgen.mutate(np.random.default_rng(seed), netgen.random_netlist(np.random.default_rng(seed)))
    doc = parse_document(text)
    assert doc.ok or doc.diagnostics
    for d in doc.diagnostics:
        assert d.line >= 1 and d.column >= 1

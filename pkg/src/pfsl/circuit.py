"""Lowering of a Netlist into primitive branches shared by every solver.

The linear AC engine, the harmonic-balance engine and the transient oracle all
consume the same :class:`Compiled` object, so they simulate exactly the same
circuit: lossy inductors as R+L branches, capacitor ESR and varactor loss as
resistors to an internal node, sources as Norton equivalents, and every port not
already driven by a source terminated in its reference impedance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Kind, Netlist
from .errors import ConfigError

# DC resistance floor for ideal inductors in the nodal formulation
R_DC_MIN = 1e-6


@dataclass
class Source:
    name: str
    kind: Kind
    ia: int
    ib: int
    g: float
    emf: complex
    freq: float
    phase: float = 0.0

    @property
    def rotation(self) -> complex:
        return complex(math.cos(self.phase), math.sin(self.phase))


@dataclass
class Junction:
    name: str
    ia: int
    ib: int
    varactor: object  # BiasedVaractor


@dataclass
class Compiled:
    node_index: dict
    n: int
    resistors: list = field(default_factory=list)   # (ia, ib, R, name)
    inductors: list = field(default_factory=list)   # (ia, ib, L, R, name)
    capacitors: list = field(default_factory=list)  # (ia, ib, C, name)
    sources: list = field(default_factory=list)
    junctions: list = field(default_factory=list)
    port_nodes: list = field(default_factory=list)  # index of each port node
    port_z0: list = field(default_factory=list)
    port_source: list = field(default_factory=list)  # source name terminating the port, or None

    def idx(self, node: int) -> int:
        return -1 if node == 0 else self.node_index[node]


def assign_port_sources(net: Netlist) -> list:
    """Map each port to the source that terminates it (or None).

    cw-sources take the lowest-numbered free port on their node, the pAG the
    highest-numbered one, mirroring an input drive and an output-side probe.
    """
    out = [None] * len(net.ports)
    for kind, order in ((Kind.CW_SOURCE, range(len(net.ports))),
                        (Kind.PAG_SOURCE, range(len(net.ports) - 1, -1, -1))):
        for e in net.elements:
            if e.kind is not kind or e.node_b != 0:
                continue
            for i in order:
                if out[i] is None and net.ports[i].node == e.node_a:
                    if not math.isclose(e.z_src, net.ports[i].z0, rel_tol=1e-9):
                        raise ConfigError(
                            f"source {e.name} impedance {e.z_src} differs from port {i + 1} z0")
                    out[i] = e.name
                    break
    return out


def compile_netlist(net: Netlist, linear: bool = False) -> Compiled:
    """Lower ``net``. With ``linear=True`` varactors become fixed capacitors C_v."""
    ext = sorted(n for n in net.nodes if n != 0)
    node_index = {n: i for i, n in enumerate(ext)}
    cc = Compiled(node_index=node_index, n=len(ext))

    def internal():
        cc.n += 1
        return cc.n - 1

    for e in net.elements:
        ia, ib = cc.idx(e.node_a), cc.idx(e.node_b)
        if e.kind is Kind.RESISTOR:
            cc.resistors.append((ia, ib, e.value, e.name))
        elif e.kind is Kind.INDUCTOR:
            cc.inductors.append((ia, ib, e.value, e.series_resistance, e.name))
        elif e.kind is Kind.CAPACITOR:
            r = e.series_resistance
            if r > 0:
                m = internal()
                cc.resistors.append((ia, m, r, e.name))
                cc.capacitors.append((m, ib, e.value, e.name))
            else:
                cc.capacitors.append((ia, ib, e.value, e.name))
        elif e.kind is Kind.VARACTOR:
            m = internal()
            cc.resistors.append((ia, m, e.series_resistance, e.name))
            if linear:
                cc.capacitors.append((m, ib, e.varactor.c_v, e.name))
            else:
                cc.junctions.append(Junction(e.name, m, ib, e.varactor))
        else:
            cc.sources.append(Source(e.name, e.kind, ia, ib, 1.0 / e.z_src,
                                     e.emf * complex(math.cos(e.phase), math.sin(e.phase)),
                                     e.value, e.phase))

    cc.port_source = assign_port_sources(net)
    for i, p in enumerate(net.ports):
        cc.port_nodes.append(cc.idx(p.node))
        cc.port_z0.append(p.z0)
        if cc.port_source[i] is None:
            cc.resistors.append((cc.idx(p.node), -1, p.z0, f"port{i + 1}"))
    return cc


def _stamp(Y, ia, ib, y):
    if ia >= 0:
        Y[ia, ia] += y
    if ib >= 0:
        Y[ib, ib] += y
    if ia >= 0 and ib >= 0:
        Y[ia, ib] -= y
        Y[ib, ia] -= y


def admittance(cc: Compiled, f: float, skip=()) -> np.ndarray:
    """Nodal admittance matrix at frequency ``f`` (junctions excluded).

    Elements whose name is in ``skip`` are left out; port terminations are named
    ``port1``, ``port2``, ...
    """
    Y = np.zeros((cc.n, cc.n), dtype=complex)
    w = 2.0 * math.pi * f
    for ia, ib, r, name in cc.resistors:
        if name not in skip:
            _stamp(Y, ia, ib, 1.0 / r)
    for ia, ib, l, r, name in cc.inductors:
        if name in skip:
            continue
        z = complex(max(r, R_DC_MIN), 0.0) if w == 0 else complex(r, w * l)
        _stamp(Y, ia, ib, 1.0 / z)
    if w != 0:
        for ia, ib, c, name in cc.capacitors:
            if name not in skip:
                _stamp(Y, ia, ib, 1j * w * c)
    for s in cc.sources:
        if s.name not in skip:
            _stamp(Y, s.ia, s.ib, s.g)
    return Y


def source_currents(cc: Compiled, f: float, kinds=None, skip=()) -> np.ndarray:
    """Norton current injections of every source tuned to ``f``."""
    J = np.zeros(cc.n, dtype=complex)
    for s in cc.sources:
        if s.name in skip or (kinds is not None and s.kind not in kinds):
            continue
        if math.isclose(s.freq, f, rel_tol=1e-9):
            i = s.emf * s.g
            if s.ia >= 0:
                J[s.ia] += i
            if s.ib >= 0:
                J[s.ib] -= i
    return J


def element_names(cc: Compiled) -> set:
    names = {t[-1] for t in cc.resistors + cc.inductors + cc.capacitors}
    names |= {s.name for s in cc.sources} | {j.name for j in cc.junctions}
    return names

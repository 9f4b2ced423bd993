"""Domain types shared by the design, linear, harmonic-balance and transient code.

All quantities are SI: W, Hz, F, H, ohm, V.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import ConfigError, DomainError

TWO_PI = 2.0 * math.pi
V_BREAKDOWN_DEFAULT = 15.0
# zero-bias junction capacitance that puts 1.6 pF of junction (2.0 pF total with
# the 0.4 pF package) at 1.1 V reverse bias for v_j = 0.8 V, gamma = 1.1
CJ0_DEFAULT = 1.6e-12 * (1.0 + 1.1 / 0.8) ** 1.1


@dataclass(frozen=True)
class DesignPoint:
    """Port termination, target input frequency and passive-component Q."""

    z0: float = 50.0
    f_in_opt: float = 2.1e9
    q_l: float = math.inf

    def __post_init__(self):
        if not self.z0 > 0:
            raise DomainError(f"z0 must be positive, got {self.z0}")
        if not self.f_in_opt > 0:
            raise DomainError(f"f_in_opt must be positive, got {self.f_in_opt}")
        if not self.q_l > 0:
            raise DomainError(f"q_l must be positive, got {self.q_l}")

    @property
    def omega_in(self) -> float:
        return TWO_PI * self.f_in_opt

    @property
    def omega_d(self) -> float:
        return self.omega_in / 2.0


@dataclass(frozen=True)
class VaractorModel:
    """Graded-junction varactor with package capacitance and forward conduction.

    The junction capacitance is ``c_j0 / (1 + v/v_j)**gamma`` in reverse bias and
    is continued linearly below ``-fc*v_j`` (SPICE convention) so the charge stays
    finite when the diode is driven into forward conduction.
    """

    c_j0: float = CJ0_DEFAULT
    v_j: float = 0.8
    gamma: float = 1.1
    q_v: float = 15.0
    v_bi: float = 0.7
    i_s: float = 1e-14
    n_ideality: float = 1.0
    c_pkg: float = 0.4e-12
    fc: float = 0.5
    v_breakdown: float = V_BREAKDOWN_DEFAULT

    def __post_init__(self):
        for name in ("c_j0", "v_j", "gamma", "q_v", "v_bi", "i_s", "n_ideality"):
            if not getattr(self, name) > 0:
                raise DomainError(f"varactor {name} must be positive")
        if self.c_pkg < 0:
            raise DomainError("c_pkg must be >= 0")
        if not 0 < self.fc < 1:
            raise DomainError("fc must lie in (0, 1)")

    def junction_capacitance(self, v_r: float) -> float:
        """Junction capacitance at reverse voltage ``v_r`` (no package term)."""
        if v_r >= -self.fc * self.v_j:
            return self.c_j0 / (1.0 + v_r / self.v_j) ** self.gamma
        # linear continuation past the depletion-approximation limit
        c_fc = self.c_j0 / (1.0 - self.fc) ** self.gamma
        slope = self.gamma * c_fc / (self.v_j * (1.0 - self.fc))
        return c_fc + slope * (-self.fc * self.v_j - v_r)

    def capacitance(self, v_r: float) -> float:
        return self.c_pkg + self.junction_capacitance(v_r)

    @classmethod
    def for_target(cls, c_v: float, v_dc: float, **kw) -> "VaractorModel":
        """Model whose total capacitance at ``v_dc`` equals ``c_v``.

        ``c_j0`` is solved for; every other parameter comes from ``kw`` or the
        class defaults.
        """
        proto = cls(**kw)
        c_junction = c_v - proto.c_pkg
        if c_junction <= 0:
            raise DomainError("target capacitance must exceed the package capacitance")
        c_j0 = c_junction * (1.0 + v_dc / proto.v_j) ** proto.gamma
        return dataclasses.replace(proto, c_j0=c_j0)


@dataclass(frozen=True)
class BiasedVaractor:
    """A varactor linearised at its DC bias.

    ``delta`` is the per-volt normalised slope: ``C(V_DC + v) ~ c_v*(1 + delta*v)``.
    """

    model: VaractorModel
    v_dc: float
    c_v: float
    delta: float

    def __post_init__(self):
        if not self.c_v > 0:
            raise DomainError("c_v must be positive")
        if not 0 < self.delta < 2:
            raise DomainError(f"delta={self.delta} outside (0, 2)")
        if self.c_v < self.model.c_pkg:
            raise DomainError("c_v below the package capacitance")

    def series_resistance(self, f_ref: float) -> float:
        """Loss resistance realising ``q_v`` at ``f_ref``."""
        return 1.0 / (TWO_PI * f_ref * self.c_v * self.model.q_v)


def capacitance_at_bias(model: VaractorModel, v_dc: float) -> BiasedVaractor:
    """Total capacitance and normalised tuning slope of ``model`` at ``v_dc``."""
    if not (v_dc >= 0):
        raise DomainError(f"bias {v_dc} V is forward; only reverse bias is modelled")
    if v_dc >= model.v_breakdown:
        raise DomainError(f"bias {v_dc} V exceeds the {model.v_breakdown} V breakdown limit")
    # exp/log1p form: extreme grading exponents underflow instead of overflowing
    c_j = model.c_j0 * math.exp(-model.gamma * math.log1p(v_dc / model.v_j))
    c_v = model.c_pkg + c_j
    if not c_v > 0:
        raise DomainError(f"capacitance underflows at {v_dc} V (gamma={model.gamma})")
    dc_dv = model.gamma * c_j / (model.v_j + v_dc)
    return BiasedVaractor(model=model, v_dc=float(v_dc), c_v=c_v, delta=dc_dv / c_v)


def component_series_resistance(kind: str, value: float, q: float, f_ref: float) -> float:
    """Series loss resistance of an inductor or capacitor with quality factor ``q``.

    ``q = inf`` gives 0 (lossless).
    """
    if not (value > 0 and q > 0 and f_ref > 0):
        raise DomainError("value, q and f_ref must all be positive")
    w = TWO_PI * f_ref
    if kind in ("inductor", "L"):
        return w * value / q
    if kind in ("capacitor", "C"):
        return 1.0 / (w * value * q)
    raise DomainError(f"no series-loss model for component kind {kind!r}")


@dataclass(frozen=True)
class TransformerSpec:
    """Lumped C-L-C quarter-wave inverter."""

    z_tx: float
    l_t: float
    c_t: float

    def __post_init__(self):
        if not self.z_tx > 0:
            raise DomainError("z_tx must be positive")
        if abs(math.sqrt(self.l_t / self.c_t) - self.z_tx) > 1e-9 * self.z_tx:
            raise DomainError("z_tx inconsistent with sqrt(l_t/c_t)")

    @classmethod
    def at(cls, z_tx: float, omega: float) -> "TransformerSpec":
        return cls(z_tx=z_tx, l_t=z_tx / omega, c_t=1.0 / (z_tx * omega))


@dataclass(frozen=True)
class ImpedanceSet:
    z1_in: complex
    z2_in: complex
    z3_in: complex
    z1_d: complex
    z2_d: complex
    z3_d: complex
    z_in: complex

    def __post_init__(self):
        for f in dataclasses.fields(self):
            z = complex(getattr(self, f.name))
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise DomainError(f"{f.name} is not finite")


@dataclass(frozen=True)
class AnalyticLosses:
    """Series losses of the two resonant loops and the transformed input path."""

    r_s: float
    r_d: float
    r_p: float

    def __post_init__(self):
        if not (self.r_s > 0 and self.r_d > 0 and self.r_p > 0):
            raise DomainError("losses must be positive")
        if self.r_p < self.r_s:
            raise DomainError("r_p must be >= r_s")


# --------------------------------------------------------------------------
# netlist


class Kind(str, Enum):
    RESISTOR = "R"
    INDUCTOR = "L"
    CAPACITOR = "C"
    VARACTOR = "X"
    CW_SOURCE = "V"
    PAG_SOURCE = "A"


SOURCE_KINDS = (Kind.CW_SOURCE, Kind.PAG_SOURCE)


@dataclass(frozen=True)
class Element:
    """One two-terminal netlist element.

    For sources ``value`` is the frequency in Hz, ``power`` the available power
    and ``z_src`` the (real) source impedance. ``q`` is referred to ``f_ref``.
    """

    name: str
    kind: Kind
    node_a: int
    node_b: int
    value: float = 0.0
    q: float | None = None
    f_ref: float | None = None
    varactor: BiasedVaractor | None = None
    model: str | None = None
    power: float = 0.0
    z_src: float = 50.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.name:
            raise ConfigError("element needs a name")
        if self.node_a == self.node_b:
            raise ConfigError(f"{self.name}: both terminals on node {self.node_a}")
        if self.kind is Kind.VARACTOR:
            if self.varactor is None:
                raise ConfigError(f"{self.name}: varactor without a biased model")
            if self.f_ref is None or not self.f_ref > 0:
                raise ConfigError(f"{self.name}: varactor needs a positive f_ref for its Q")
        elif not self.value > 0:
            raise ConfigError(f"{self.name}: value must be strictly positive")
        if self.kind in SOURCE_KINDS:
            if self.power < 0 or not self.z_src > 0:
                raise ConfigError(f"{self.name}: bad source power or impedance")
        if self.q is not None:
            if not self.q > 0:
                raise ConfigError(f"{self.name}: Q must be positive")
            if self.f_ref is None or not self.f_ref > 0:
                raise ConfigError(f"{self.name}: Q given without a reference frequency")

    @property
    def is_source(self) -> bool:
        return self.kind in SOURCE_KINDS

    def renamed(self, name: str, node_a: int, node_b: int) -> "Element":
        return dataclasses.replace(self, name=name, node_a=node_a, node_b=node_b)

    @property
    def series_resistance(self) -> float:
        if self.kind is Kind.VARACTOR:
            return self.varactor.series_resistance(self.f_ref)
        if self.q is None or math.isinf(self.q):
            return 0.0
        return component_series_resistance(self.kind.value, self.value, self.q, self.f_ref)

    @property
    def emf(self) -> float:
        """Peak open-circuit voltage of a source delivering ``power`` into a match."""
        return math.sqrt(8.0 * self.z_src * self.power)


@dataclass(frozen=True)
class Port:
    node: int
    ref: int = 0
    z0: float = 50.0

    def __post_init__(self):
        if self.ref != 0:
            raise ConfigError("ports are single-ended: reference node must be 0")
        if not self.z0 > 0:
            raise ConfigError("port z0 must be positive")


@dataclass(frozen=True)
class Netlist:
    elements: tuple[Element, ...]
    ports: tuple[Port, ...]
    models: dict = field(default_factory=dict, compare=False)
    v_bias: float | None = None
    f_ref: float | None = None
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "ports", tuple(self.ports))
        seen = set()
        for e in self.elements:
            key = e.name.upper()
            if key in seen:
                raise ConfigError(f"duplicate element name {e.name}")
            seen.add(key)
        if not self.ports:
            raise ConfigError("netlist declares no port")
        nodes = self.nodes
        for p in self.ports:
            if p.node not in nodes:
                raise ConfigError(f"port on undefined node {p.node}")
        pags = [e for e in self.elements if e.kind is Kind.PAG_SOURCE]
        if len(pags) > 1:
            raise ConfigError("at most one pAG source is allowed")
        cws = [e for e in self.elements if e.kind is Kind.CW_SOURCE]
        if pags and cws:
            if not math.isclose(pags[0].value, cws[0].value / 2.0, rel_tol=1e-9):
                raise ConfigError("pAG frequency must be half of the cw-source frequency")

    @property
    def nodes(self) -> set[int]:
        out = {0}
        for e in self.elements:
            out.add(e.node_a)
            out.add(e.node_b)
        return out

    def element(self, name: str) -> Element:
        for e in self.elements:
            if e.name.upper() == name.upper():
                return e
        raise KeyError(name)

    @property
    def cw_sources(self) -> list[Element]:
        return [e for e in self.elements if e.kind is Kind.CW_SOURCE]

    @property
    def pag_source(self) -> Element | None:
        for e in self.elements:
            if e.kind is Kind.PAG_SOURCE:
                return e
        return None

    @property
    def varactors(self) -> list[Element]:
        return [e for e in self.elements if e.kind is Kind.VARACTOR]

    def replace(self, **changes) -> "Netlist":
        return dataclasses.replace(self, **changes)

    def without(self, names: Iterable[str]) -> "Netlist":
        drop = {n.upper() for n in names}
        return self.replace(elements=tuple(e for e in self.elements if e.name.upper() not in drop))

    def with_drive(self, f_in: float | None = None, p_in: float | None = None) -> "Netlist":
        """Copy with the cw-source retuned to ``f_in``/``p_in`` and the pAG to ``f_in/2``."""
        out = []
        for e in self.elements:
            if e.kind is Kind.CW_SOURCE:
                e = dataclasses.replace(
                    e,
                    value=e.value if f_in is None else f_in,
                    power=e.power if p_in is None else p_in,
                )
            elif e.kind is Kind.PAG_SOURCE and f_in is not None:
                e = dataclasses.replace(e, value=f_in / 2.0)
            out.append(e)
        return self.replace(elements=tuple(out))

    def floating_nodes(self) -> set[int]:
        """Nodes with no DC path to ground (capacitors and junctions block DC)."""
        parent = {n: n for n in self.nodes}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        for e in self.elements:
            if e.kind in (Kind.CAPACITOR, Kind.VARACTOR):
                continue
            parent[find(e.node_a)] = find(e.node_b)
        for p in self.ports:
            parent[find(p.node)] = find(0)
        g = find(0)
        return {n for n in self.nodes if find(n) != g}

    def digest(self) -> str:
        """Short stable hash of the circuit content, used in trace metadata."""
        h = hashlib.sha1()
        for e in self.elements:
            h.update(repr((e.name, e.kind.value, e.node_a, e.node_b, e.value, e.q, e.f_ref,
                           e.power, e.z_src, e.phase,
                           None if e.varactor is None else (e.varactor.v_dc, e.varactor.c_v))).encode())
        for p in self.ports:
            h.update(repr((p.node, p.z0)).encode())
        return h.hexdigest()[:12]

"""Harmonic balance against the transient integrator on nonlinear fixtures.

Each fixture is integrated long enough for the start-up transient to die out;
the last ``N_PERIODS`` periods of ``1/f0`` are transformed and compared with the
HB phasors at every external node and across every junction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import transient
from .core import Element, Kind, Netlist, Port, VaractorModel, capacitance_at_bias
from .hb import K_DEFAULT, HBProblem, HBSolution
from .sweep import power_sweep
from .units import dbm_to_w

TOL = 0.01
K_COMPARE = (1, 2, 3)
# lines weaker than this fraction of the fixture's strongest line are compared
# against that line instead of against themselves (trap nodes sit near a null)
REL_FLOOR = 1e-2
SWEEP_START_DBM = -10.0


@dataclass(frozen=True)
class Fixture:
    name: str
    net: Netlist
    f_in: float
    p_in: float

    @property
    def has_pag(self) -> bool:
        return self.net.pag_source is not None


@dataclass(frozen=True)
class OracleRow:
    fixture: str
    probe: str
    k: int
    hb: float
    transient: float
    error: float


@dataclass(frozen=True)
class OracleReport:
    rows: tuple
    divided: dict

    @property
    def max_error(self) -> float:
        return max(r.error for r in self.rows)

    def fixture_error(self, name: str) -> float:
        return max(r.error for r in self.rows if r.fixture == name)

    def passed(self, tol: float = TOL) -> bool:
        return self.max_error <= tol

    def summary(self) -> str:
        lines = []
        for name in dict.fromkeys(r.fixture for r in self.rows):
            lines.append(f"{name:28s} max err {self.fixture_error(name):.3e}"
                         f"{'  (period-doubled)' if self.divided.get(name) else ''}")
        return "\n".join(lines)


def _source(f, p, name="V1", node=1):
    return Element(name, Kind.CW_SOURCE, node, 0, value=f, power=p, z_src=50.0)


def series_rc(v_emf: float = 1.0, f: float = 1e9, r: float = 20.0, v_dc: float = 1.1) -> Fixture:
    """Source, series resistor and a varactor to ground; ``v_emf`` is the peak EMF."""
    bv = capacitance_at_bias(VaractorModel(), v_dc)
    p = v_emf ** 2 / (8.0 * 50.0)
    net = Netlist((_source(f, p), Element("R1", Kind.RESISTOR, 1, 2, value=r),
                   Element("X1", Kind.VARACTOR, 2, 0, varactor=bv, f_ref=f)),
                  (Port(1),), title=f"series R-varactor {v_emf:g} V")
    return Fixture(f"series_rv_{v_emf:g}V", net, f, p)


def shunt_tank(p_dbm: float = 10.0, f: float = 1e9) -> Fixture:
    """Low-Q parallel tank (inductor plus varactor) hung off a through line."""
    bv = capacitance_at_bias(VaractorModel(), 2.0)
    l = 1.0 / ((2 * math.pi * 1.3 * f) ** 2 * bv.c_v)
    p = dbm_to_w(p_dbm)
    net = Netlist((_source(f, p),
                   Element("R1", Kind.RESISTOR, 1, 2, value=10.0),
                   Element("L1", Kind.INDUCTOR, 2, 0, value=l, q=30.0, f_ref=f),
                   Element("X1", Kind.VARACTOR, 2, 0, varactor=bv, f_ref=f),
                   Element("C1", Kind.CAPACITOR, 2, 3, value=2e-12, q=200.0, f_ref=f)),
                  (Port(1), Port(3)), title="shunt tank")
    return Fixture(f"shunt_tank_{p_dbm:g}dBm", net, f, p)


def pfsl(p_dbm: float, network=None) -> Fixture:
    """The tuned single-stage limiter, with pAG, at ``p_dbm``."""
    from .synthesis import prototype
    sn = network if network is not None else prototype().scaled_zb(0.95)
    p = dbm_to_w(p_dbm)
    net = sn.netlist(p_in=p)
    return Fixture(f"pfsl_{p_dbm:g}dBm", net, sn.design.f_in_opt, p)


def default_fixtures() -> list:
    return [series_rc(1.0), series_rc(3.0), shunt_tank(10.0), pfsl(-10.0), pfsl(4.0)]


def hb_reference(fx: Fixture, k_harmonics: int = K_DEFAULT) -> HBSolution:
    """HB state at the fixture power; pAG fixtures are reached by a warm-started sweep."""
    net = fx.net.with_drive(f_in=fx.f_in, p_in=fx.p_in)
    p_start = dbm_to_w(SWEEP_START_DBM)
    if fx.has_pag and fx.p_in > p_start * 1.0001:
        tr = power_sweep(net, fx.f_in, p_start, fx.p_in, 1.0, k_harmonics=k_harmonics)
        prob = HBProblem(net, fx.f_in, k_harmonics)
        return prob.solve(tr.states[-1])
    return HBProblem(net, fx.f_in, k_harmonics, require_pag=False).solve()


def oracle_duration(f_in: float, f0: float, n_periods: int = transient.N_PERIODS) -> float:
    need = n_periods / f0 / (1.0 - transient.DISCARD)
    return max(transient.N_DRIVE_PERIODS / f_in, math.ceil(need * f_in * 1.01) / f_in)


def _rows(name, pairs):
    scale = max(abs(hb[k]) for _, hb, _ in pairs for k in K_COMPARE)
    rows = []
    for probe, hb, tr in pairs:
        for k in K_COMPARE:
            h, t = abs(hb[k]), abs(tr[k])
            rows.append(OracleRow(name, probe, k, float(h), float(t),
                                  float(abs(t - h) / max(h, REL_FLOOR * scale))))
    return rows


def compare(fx: Fixture, k_harmonics: int = K_DEFAULT, dt: float | None = None,
            kernel: str | None = None) -> tuple[list, bool]:
    """Rows of HB-vs-transient harmonic magnitudes; also whether HB is divided."""
    sol = hb_reference(fx, k_harmonics)
    net = fx.net.with_drive(f_in=fx.f_in, p_in=fx.p_in)
    w = transient.transient_solve(net, oracle_duration(fx.f_in, sol.f0), dt, kernel=kernel)
    sl = transient._window(w, sol.f0, transient.N_PERIODS, transient.DISCARD)
    t = w.t[sl]
    kmax = max(K_COMPARE)
    pairs = [(f"node {node}", spec.phasors,
              transient.spectrum_of(w.node(node)[sl], t, sol.f0, kmax))
             for node, spec in sorted(sol.spectra.items())]
    pairs += [(f"junction {name}", spec.phasors,
               transient.spectrum_of(transient.junction_voltage(w, name)[sl], t, sol.f0, kmax))
              for name, spec in sol.junction_spectra.items()]
    rows = _rows(fx.name, pairs)
    divided = fx.has_pag and sol.sub_amplitude > 1e-3 * np.max(
        [abs(s.phasors[2]) for s in sol.junction_spectra.values()])
    return rows, bool(divided)


def run_oracle(fixtures=None, k_harmonics: int = K_DEFAULT, dt: float | None = None,
               kernel: str | None = None) -> OracleReport:
    rows, divided = [], {}
    for fx in fixtures or default_fixtures():
        r, d = compare(fx, k_harmonics, dt, kernel)
        rows += r
        divided[fx.name] = d
    return OracleReport(tuple(rows), divided)

"""Small-signal AC analysis: nodal solves, S-parameters, driving-point impedances."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circuit import Compiled, admittance, compile_netlist, element_names, source_currents
from .core import Netlist
from .errors import ConfigError, DegenerateTopologyError

COND_LIMIT = 1e12
OPEN = complex(math.inf, 0.0)


@dataclass(frozen=True)
class AcSystem:
    frequency: float
    y: np.ndarray
    j: np.ndarray
    compiled: Compiled


@dataclass(frozen=True)
class SParameters:
    frequency: float
    s11: complex
    s21: complex
    s12: complex
    s22: complex
    z0: tuple = (50.0, 50.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s21, self.s22]], dtype=complex)

    @classmethod
    def from_matrix(cls, f: float, s: np.ndarray, z0=(50.0, 50.0)) -> "SParameters":
        return cls(f, complex(s[0, 0]), complex(s[1, 0]), complex(s[0, 1]), complex(s[1, 1]),
                   tuple(z0))

    def reversed(self) -> "SParameters":
        return SParameters(self.frequency, self.s22, self.s12, self.s21, self.s11,
                           tuple(reversed(self.z0)))


def _node_label(cc: Compiled, i: int):
    for n, k in cc.node_index.items():
        if k == i:
            return n
    return f"internal#{i}"


def _solve(cc: Compiled, y: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if y.shape[0] == 0:
        return np.zeros_like(rhs)
    cond = np.linalg.cond(y)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        weak = int(np.argmin(np.abs(y).sum(axis=1)))
        node = _node_label(cc, weak)
        raise DegenerateTopologyError(
            f"nodal matrix is singular (condition {cond:.3g}); check node {node}", node=node)
    return np.linalg.solve(y, rhs)


def assemble(net: Netlist, f: float) -> AcSystem:
    cc = compile_netlist(net, linear=True)
    return AcSystem(frequency=f, y=admittance(cc, f), j=source_currents(cc, f), compiled=cc)


def ac_solve(net: Netlist, f: float) -> dict:
    """Node-voltage phasors (peak) with every source tuned to ``f`` active.

    Varactors enter as their bias capacitance C_v plus the Q_v loss resistance.
    """
    if not any(e.is_source for e in net.elements):
        raise ConfigError("AC solve needs at least one source")
    floating = net.floating_nodes()
    if floating:
        node = min(floating)
        raise DegenerateTopologyError(f"node {node} has no DC path to ground", node=node)
    sys_ = assemble(net, f)
    v = _solve(sys_.compiled, sys_.y, sys_.j)
    return {n: complex(v[i]) for n, i in sys_.compiled.node_index.items()} | {0: 0j}


def sparams_compiled(cc: Compiled, f: float) -> np.ndarray:
    """Full S-matrix of the compiled network (sources act as matched loads)."""
    y = admittance(cc, f)
    n_p = len(cc.port_nodes)
    rhs = np.zeros((cc.n, n_p), dtype=complex)
    for j, (node, z0) in enumerate(zip(cc.port_nodes, cc.port_z0)):
        rhs[node, j] = 2.0 / math.sqrt(z0)  # E = 2 sqrt(z0) for unit incident wave
    v = _solve(cc, y, rhs)
    s = np.empty((n_p, n_p), dtype=complex)
    for i, (node, z0) in enumerate(zip(cc.port_nodes, cc.port_z0)):
        s[i, :] = v[node, :] / math.sqrt(z0)
        s[i, i] -= 1.0
    return s


def sparams(net: Netlist, f: float) -> SParameters:
    if len(net.ports) != 2:
        raise ConfigError("two-port S-parameters need exactly two ports")
    cc = compile_netlist(net, linear=True)
    return SParameters.from_matrix(f, sparams_compiled(cc, f), cc.port_z0)


class SParamSweep(Sequence):
    """S-parameters over a frequency grid plus the 3-dB band around peak |S21|."""

    def __init__(self, points: list):
        self.points = list(points)

    def __getitem__(self, i):
        return self.points[i]

    def __len__(self):
        return len(self.points)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([p.frequency for p in self.points])

    @property
    def s21_db(self) -> np.ndarray:
        return np.array([20.0 * math.log10(max(abs(p.s21), 1e-300)) for p in self.points])

    @property
    def s11_db(self) -> np.ndarray:
        return np.array([20.0 * math.log10(max(abs(p.s11), 1e-300)) for p in self.points])

    def band_edges(self) -> tuple[float, float]:
        return three_db_band(self.frequencies, self.s21_db)

    @property
    def center(self) -> float:
        return float(self.frequencies[int(np.argmax(self.s21_db))])

    @property
    def fractional_bw(self) -> float:
        lo, hi = self.band_edges()
        return (hi - lo) / (0.5 * (hi + lo))


def three_db_band(f: np.ndarray, s21_db: np.ndarray) -> tuple[float, float]:
    """Interpolated frequencies where |S21| falls 3 dB below its maximum.

    An edge not crossed inside the sweep is returned as NaN.
    """
    k = int(np.argmax(s21_db))
    level = s21_db[k] - 3.0
    lo = hi = math.nan
    for i in range(k, 0, -1):
        if s21_db[i - 1] < level:
            t = (s21_db[i] - level) / (s21_db[i] - s21_db[i - 1])
            lo = f[i] - t * (f[i] - f[i - 1])
            break
    for i in range(k, len(f) - 1):
        if s21_db[i + 1] < level:
            t = (s21_db[i] - level) / (s21_db[i] - s21_db[i + 1])
            hi = f[i] + t * (f[i + 1] - f[i])
            break
    return lo, hi


def sweep_sparams(net: Netlist, f_start: float, f_stop: float, n_points: int) -> SParamSweep:
    if not (0 < f_start < f_stop):
        raise ConfigError("need 0 < f_start < f_stop")
    if n_points < 2:
        raise ConfigError("need at least two frequency points")
    if len(net.ports) != 2:
        raise ConfigError("two-port S-parameters need exactly two ports")
    cc = compile_netlist(net, linear=True)
    pts = [SParameters.from_matrix(f, sparams_compiled(cc, f), cc.port_z0)
           for f in np.linspace(f_start, f_stop, n_points)]
    return SParamSweep(pts)


def driving_point_impedance(net: Netlist, node: int, exclude: Iterable[str], f: float) -> complex:
    """Impedance seen into ``node`` with the named elements removed.

    Port terminations are addressable as ``port1``, ``port2``... A node with no
    remaining path to ground gives :data:`OPEN`.
    """
    if node not in net.nodes or node == 0:
        raise ConfigError(f"node {node} is not a non-ground node of the netlist")
    cc = compile_netlist(net, linear=True)
    wanted = {e.upper() for e in exclude}
    skip = {name for name in element_names(cc) if name.upper() in wanted}
    y = admittance(cc, f, skip=skip)
    start = cc.idx(node)
    # restrict to the connected component containing the test node
    adj = np.abs(y) > 0
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for k in np.nonzero(adj[i])[0]:
            if k not in seen:
                seen.add(int(k))
                stack.append(int(k))
    idx = sorted(seen)
    sub = y[np.ix_(idx, idx)]
    # grounded iff some row does not sum to zero (a branch leaves the component)
    if np.max(np.abs(sub.sum(axis=1))) <= 1e-15 * max(1.0, np.max(np.abs(sub))):
        return OPEN
    rhs = np.zeros(len(idx), dtype=complex)
    rhs[idx.index(start)] = 1.0
    try:
        v = np.linalg.solve(sub, rhs)
    except np.linalg.LinAlgError:
        return OPEN
    return complex(v[idx.index(start)])


# --------------------------------------------------------------------------
# two-port cascading


def s_to_t(s: np.ndarray) -> np.ndarray:
    s11, s12, s21, s22 = s[0, 0], s[0, 1], s[1, 0], s[1, 1]
    return np.array([[-(s11 * s22 - s12 * s21), s11], [-s22, 1.0]], dtype=complex) / s21


def t_to_s(t: np.ndarray) -> np.ndarray:
    t11, t12, t21, t22 = t[0, 0], t[0, 1], t[1, 0], t[1, 1]
    return np.array([[t12, t11 * t22 - t12 * t21], [1.0, -t21]], dtype=complex) / t22


def cascade(a: Sequence[SParameters], b: Sequence[SParameters]) -> list[SParameters]:
    """Chain two-ports ``a`` then ``b`` on a common frequency grid."""
    if len(a) != len(b):
        raise ConfigError("frequency grids differ in length")
    out = []
    for pa, pb in zip(a, b):
        if not math.isclose(pa.frequency, pb.frequency, rel_tol=1e-12, abs_tol=1e-9):
            raise ConfigError(f"frequency mismatch {pa.frequency} vs {pb.frequency}")
        if not math.isclose(pa.z0[1], pb.z0[0], rel_tol=1e-12):
            raise ConfigError("reference impedances at the junction differ")
        t = s_to_t(pa.matrix) @ s_to_t(pb.matrix)
        out.append(SParameters.from_matrix(pa.frequency, t_to_s(t), (pa.z0[0], pb.z0[1])))
    return out


def thru(frequencies: Iterable[float], z0: float = 50.0) -> list[SParameters]:
    return [SParameters(float(f), 0j, 1 + 0j, 1 + 0j, 0j, (z0, z0)) for f in frequencies]

"""Brute-force time-domain oracle for the harmonic-balance engine.

The netlist is lowered with the same :func:`compile_netlist` the other solvers
use and integrated with the trapezoidal rule. Varactors enter through their
charge ``q(v)`` rather than ``C(v) dv/dt`` so charge is conserved exactly from
step to step. The stepping loop lives in a compiled extension when available;
``KERNEL`` names the one picked at import.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import device
from ._transient_py import integrate as _integrate_py
from .circuit import Compiled, compile_netlist
from .core import Kind, Netlist
from .errors import ConfigError, ConvergenceError, DomainError
from .hb import K_DEFAULT, HarmonicSpectrum

try:
    from ._transient_ext import integrate as _integrate_ext
except ImportError:  # extension not built
    _integrate_ext = None

KERNEL = "cython" if _integrate_ext is not None else "python"

STEPS_PER_PERIOD = 200
N_DRIVE_PERIODS = 500
MIN_STEPS_PER_PERIOD = 100
NEWTON_TOL = 1e-12
NEWTON_MAX = 50
# Newton step cap on a junction voltage; keeps iterates out of the exponential wall
NEWTON_MAX_DV = 0.2
DISCARD = 0.8
# sources fade in over this many drive periods
RAMP_PERIODS = 10
# positional order of the matrix arguments of both kernels
KERNEL_ARGS = ("minv", "cm", "gm", "al", "a", "b", "j_ia", "j_ib", "jpar",
               "s_ia", "s_ib", "s_amp", "s_w", "s_ph")
N_PERIODS = 64


@dataclass(frozen=True)
class Waveform:
    """Samples ``t = dt, 2*dt, ...`` of every compiled node and inductor current.

    ``labels`` name the voltage columns: external node numbers first, then
    ``"<element>:int"`` for nodes created inside a lossy element.
    """

    dt: float
    samples: np.ndarray
    labels: tuple
    currents: np.ndarray = field(default=None, repr=False)
    current_labels: tuple = ()
    compiled: Compiled = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.samples.ndim != 2 or self.samples.shape[1] != len(self.labels):
            raise ConfigError("sample matrix does not match the labels")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("waveform contains non-finite samples")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return self.n_samples * self.dt

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(1, self.n_samples + 1)

    def column(self, node) -> int:
        try:
            return self.labels.index(node)
        except ValueError:
            raise ConfigError(f"node {node!r} not in waveform") from None

    def node(self, node) -> np.ndarray:
        return self.samples[:, self.column(node)]

    def write_csv(self, path) -> None:
        """Raw dump for debugging: ``t`` followed by every node voltage."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t_s"] + [f"v_{lab}_v" for lab in self.labels])
            for t, row in zip(self.t, self.samples):
                wr.writerow([f"{t:.12g}"] + [f"{x:.12g}" for x in row])


def _drive_frequency(net: Netlist) -> float:
    cws = net.cw_sources
    if len(cws) != 1:
        raise ConfigError(f"transient analysis needs exactly one cw-source, found {len(cws)}")
    return cws[0].value


def _labels(cc: Compiled) -> tuple:
    labels = [None] * cc.n
    for node, i in cc.node_index.items():
        labels[i] = node
    for ia, ib, *_, name in cc.resistors:
        for i in (ia, ib):
            if i >= 0 and labels[i] is None:
                labels[i] = f"{name}:int"
    for ia, ib, _, name in cc.capacitors:
        for i in (ia, ib):
            if i >= 0 and labels[i] is None:
                labels[i] = f"{name}:int"
    return tuple(lab if lab is not None else f"#{i}" for i, lab in enumerate(labels))


def _stamp(M, ia, ib, y):
    if ia >= 0:
        M[ia, ia] += y
    if ib >= 0:
        M[ib, ib] += y
    if ia >= 0 and ib >= 0:
        M[ia, ib] -= y
        M[ib, ia] -= y


def _junction_params(jn) -> np.ndarray:
    bv = jn.varactor
    m = bv.model
    nvt = m.n_ideality * device.THERMAL_VOLTAGE
    q_dc = float(device._junction_charge(m, bv.v_dc))
    return np.array([m.c_j0, m.v_j, m.gamma, m.fc, m.c_pkg, m.i_s, nvt, bv.v_dc, q_dc, 0.0])


def assemble(cc: Compiled, dt: float) -> dict:
    """Matrices of the trapezoidal update, shared by both kernels."""
    n, h = cc.n, 0.5 * dt
    C = np.zeros((n, n))
    G = np.zeros((n, n))
    for ia, ib, c, _ in cc.capacitors:
        _stamp(C, ia, ib, c)
    for ia, ib, r, _ in cc.resistors:
        _stamp(G, ia, ib, 1.0 / r)
    for s in cc.sources:
        _stamp(G, s.ia, s.ib, s.g)
    nl = len(cc.inductors)
    AL = np.zeros((n, nl))
    a = np.empty(nl)
    b = np.empty(nl)
    for k, (ia, ib, l, r, _) in enumerate(cc.inductors):
        if ia >= 0:
            AL[ia, k] = 1.0
        if ib >= 0:
            AL[ib, k] = -1.0
        a[k] = (l - h * r) / (l + h * r)
        b[k] = h / (l + h * r)
    nj = len(cc.junctions)
    jpar = np.zeros((nj, 10))
    P = np.zeros((nj, n))
    for k, jn in enumerate(cc.junctions):
        jpar[k] = _junction_params(jn)
        m = jn.varactor.model
        _, g0 = device.conduction(m, jn.varactor.v_dc, 0.0)
        jpar[k, 9] = float(device.capacitance(m, jn.varactor.v_dc, 0.0)) + h * float(g0)
        if jn.ia >= 0:
            P[k, jn.ia] = 1.0
        if jn.ib >= 0:
            P[k, jn.ib] = -1.0
    M = C + h * (G + (AL * b) @ AL.T) + P.T @ (jpar[:, 9:10] * P)
    cond = np.linalg.cond(M) if n else 1.0
    if not np.isfinite(cond) or cond > 1e14:
        raise ConfigError(f"transient system matrix is singular (condition {cond:.3g})")
    src = [s for s in cc.sources]
    return dict(
        minv=np.linalg.inv(M), cm=C, gm=G, al=AL, a=a, b=b,
        j_ia=np.array([jn.ia for jn in cc.junctions], dtype=np.int64),
        j_ib=np.array([jn.ib for jn in cc.junctions], dtype=np.int64),
        jpar=jpar,
        s_ia=np.array([s.ia for s in src], dtype=np.int64),
        s_ib=np.array([s.ib for s in src], dtype=np.int64),
        s_amp=np.array([abs(s.emf) * s.g for s in src]),
        s_w=np.array([2.0 * math.pi * s.freq for s in src]),
        s_ph=np.array([math.atan2(s.emf.imag, s.emf.real) for s in src]),
    )


def transient_solve(net: Netlist, duration: float | None = None, dt: float | None = None,
                    kernel: str | None = None) -> Waveform:
    """Integrate ``net`` from rest (every junction at its DC bias).

    Sources fade in over the first ``RAMP_PERIODS`` drive periods.
    Defaults: ``dt = 1/(200 f_in)`` and 500 drive periods. ``kernel`` forces
    ``"python"`` or ``"cython"``.
    """
    f_in = _drive_frequency(net)
    if dt is None:
        dt = 1.0 / (STEPS_PER_PERIOD * f_in)
    if duration is None:
        duration = N_DRIVE_PERIODS / f_in
    if not dt > 0 or not duration > 0:
        raise DomainError("dt and duration must be positive")
    if dt > 1.0 / (MIN_STEPS_PER_PERIOD * f_in) * (1 + 1e-9):
        raise ConfigError(f"dt={dt:.4g} s exceeds 1/(100 f_in)")
    n_steps = int(round(duration / dt))
    if n_steps < 1:
        raise DomainError("duration shorter than one step")
    cc = compile_netlist(net, linear=False)
    mats = assemble(cc, dt)
    kernel = kernel or KERNEL
    if kernel == "cython":
        if _integrate_ext is None:
            raise ConfigError("compiled transient kernel is not available")
        fn = _integrate_ext
    elif kernel == "python":
        fn = _integrate_py
    else:
        raise ConfigError(f"unknown kernel {kernel!r}")
    V, I, fail = fn(*(mats[k] for k in KERNEL_ARGS), dt, n_steps, NEWTON_TOL,
                    NEWTON_MAX, NEWTON_MAX_DV, RAMP_PERIODS / f_in)
    if fail >= 0:
        raise ConvergenceError(f"transient Newton failed at t = {(fail + 1) * dt:.6g} s")
    return Waveform(dt=dt, samples=V, labels=_labels(cc), currents=I,
                    current_labels=tuple(t[-1] for t in cc.inductors), compiled=cc)


def _window(w: Waveform, f0: float, n_periods: int, discard: float) -> slice:
    if not f0 > 0 or n_periods < 1:
        raise DomainError("f0 and n_periods must be positive")
    spp = 1.0 / (f0 * w.dt)
    if abs(spp - round(spp)) > 1e-6 * spp:
        raise ConfigError(f"1/f0 is not a whole number of steps ({spp:.6g})")
    n_win = n_periods * int(round(spp))
    start = int(math.floor(discard * w.n_samples))
    if w.n_samples - start < n_win:
        raise DomainError(
            f"waveform too short: {n_periods} periods need {n_win} samples after the "
            f"discard window, have {w.n_samples - start}")
    return slice(w.n_samples - n_win, w.n_samples)


def spectrum_of(x: np.ndarray, t: np.ndarray, f0: float, k_max: int) -> np.ndarray:
    """Peak phasors at k*f0 of samples spanning a whole number of periods."""
    k = np.arange(1, k_max + 1)
    e = np.exp(-2j * math.pi * f0 * np.outer(k, t))
    out = np.empty(k_max + 1, dtype=complex)
    out[0] = np.mean(x)
    out[1:] = 2.0 / len(x) * (e @ x)
    return out


def steady_state_spectrum(w: Waveform, f0: float, n_periods: int = N_PERIODS, node=None,
                          k_max: int = K_DEFAULT, discard: float = DISCARD) -> HarmonicSpectrum:
    """DFT of the last ``n_periods`` periods of ``1/f0`` at exact multiples of f0.

    ``node`` is a waveform label (default: the first column). The window spans
    whole periods, so a rectangular window has no leakage for periodic signals.
    """
    sl = _window(w, f0, n_periods, discard)
    col = 0 if node is None else w.column(node)
    return HarmonicSpectrum(f0, spectrum_of(w.samples[sl, col], w.t[sl], f0, k_max))


def junction_voltage(w: Waveform, name: str) -> np.ndarray:
    """Small-signal junction voltage (cathode minus anode) of varactor ``name``."""
    jn = next((j for j in w.compiled.junctions if j.name == name), None)
    if jn is None:
        raise ConfigError(f"no junction named {name!r}")
    va = w.samples[:, jn.ia] if jn.ia >= 0 else 0.0
    vb = w.samples[:, jn.ib] if jn.ib >= 0 else 0.0
    return va - vb


@dataclass(frozen=True)
class EnergyAudit:
    """Average powers over a steady-state window, W."""

    p_sources: float
    p_dissipated: float

    @property
    def mismatch(self) -> float:
        return abs(self.p_sources - self.p_dissipated) / max(abs(self.p_sources), 1e-300)


def energy_audit(w: Waveform, f0: float, n_periods: int = N_PERIODS,
                 discard: float = DISCARD) -> EnergyAudit:
    """Power delivered by the ideal source EMFs against every dissipative element.

    Stored energy returns to its starting value after whole periods, so in steady
    state the two must agree up to discretisation error.
    """
    cc = w.compiled
    sl = _window(w, f0, n_periods, discard)
    V = w.samples[sl]
    t = w.t[sl]

    def vdiff(ia, ib):
        return (V[:, ia] if ia >= 0 else 0.0) - (V[:, ib] if ib >= 0 else 0.0)

    p_src = 0.0
    p_diss = 0.0
    for s in cc.sources:
        e = np.real(s.emf * np.exp(2j * math.pi * s.freq * t))
        i = s.g * (e - vdiff(s.ia, s.ib))
        p_src += float(np.mean(e * i))
        p_diss += float(np.mean(i * i / s.g))
    for ia, ib, r, _ in cc.resistors:
        p_diss += float(np.mean(vdiff(ia, ib) ** 2)) / r
    if len(cc.inductors):
        I = w.currents[sl]
        for k, (_, _, _, r, _) in enumerate(cc.inductors):
            p_diss += r * float(np.mean(I[:, k] ** 2))
    for jn in cc.junctions:
        u = vdiff(jn.ia, jn.ib)
        ic, _ = device.conduction(jn.varactor.model, jn.varactor.v_dc, u)
        p_diss += float(np.mean(u * ic))
    return EnergyAudit(p_src, p_diss)

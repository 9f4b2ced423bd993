"""Harmonic-balance steady state with an auxiliary probe generator at f_in/2.

The state vector holds, for every circuit node, the DC value followed by the
real and imaginary parts of the peak phasors at k*f0 for k = 1..K. With a pAG in
the netlist f0 = f_in/2, so the drive sits on k = 2 and odd k carry the
period-doubled response. Varactor junctions are evaluated on a uniform time grid
and brought back with real DFT matrices; their Jacobian is the usual
conversion-matrix product ``A diag(dq/dv) B``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import device
from .circuit import Compiled, admittance, compile_netlist
from .core import Kind, Netlist
from .errors import ConfigError, ConvergenceError

K_DEFAULT = 7
MAX_ITER = 100
TOL_REL = 1e-9
TOL_ABS = 1e-18
MIN_TIME_SAMPLES = 64


def n_time_samples(k: int) -> int:
    return max(4 * k + 1, MIN_TIME_SAMPLES)


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Peak phasors at k*f0, k = 0..K (k = 0 is the real DC value)."""

    f0: float
    phasors: np.ndarray

    def __post_init__(self):
        if len(self.phasors) < 5:
            raise ConfigError("a spectrum needs K >= 4")
        if abs(np.imag(self.phasors[0])) > 0:
            raise ConfigError("DC phasor must be real")

    @property
    def k_max(self) -> int:
        return len(self.phasors) - 1

    def magnitude(self, k: int) -> float:
        return float(abs(self.phasors[k]))

    def waveform(self, t: np.ndarray) -> np.ndarray:
        k = np.arange(1, len(self.phasors))
        ph = np.exp(1j * 2.0 * math.pi * self.f0 * np.outer(t, k))
        return np.real(self.phasors[0]) + np.real(ph @ self.phasors[1:])


@dataclass
class HBSolution:
    p_in: float
    f_in: float
    f0: float
    x: np.ndarray
    spectra: dict
    junction_spectra: dict
    diode_v_peak: float
    p_sub: float
    s21_ls: complex
    s11_ls: complex
    converged: bool
    iterations: int
    residual: float
    det_sign: float = 1.0
    history: list = field(default_factory=list)

    @property
    def s21_db(self) -> float:
        return 20.0 * math.log10(max(abs(self.s21_ls), 1e-300))

    @property
    def s11_db(self) -> float:
        return 20.0 * math.log10(max(abs(self.s11_ls), 1e-300))

    @property
    def sub_amplitude(self) -> float:
        """Largest odd-harmonic junction phasor, a scale-free period-doubling marker."""
        return max((float(np.max(np.abs(s.phasors[1::2]))) for s in self.junction_spectra.values()),
                   default=0.0)


class HBProblem:
    """Harmonic-balance equations of one netlist at one drive frequency.

    Build once per (netlist, f_in, K); drive and probe powers can then be changed
    with :meth:`set_drive` without recompiling the linear part.
    """

    def __init__(self, net: Netlist, f_in: float, k_harmonics: int = K_DEFAULT,
                 require_pag: bool = True, n_time: int | None = None):
        if k_harmonics < 4:
            raise ConfigError("harmonic balance needs k_harmonics >= 4")
        cws = net.cw_sources
        if len(cws) != 1:
            raise ConfigError(f"harmonic balance needs exactly one cw-source, found {len(cws)}")
        pag = net.pag_source
        if pag is None and require_pag:
            raise ConfigError("netlist has no pAG source (A-line) at f_in/2")
        net = net.with_drive(f_in=f_in)
        self.net = net
        self.f_in = f_in
        self.f0 = f_in / 2.0 if pag is not None else f_in
        self.k_drive = 2 if pag is not None else 1
        self.K = k_harmonics
        self.M = 2 * k_harmonics + 1
        cc = compile_netlist(net, linear=False)
        self.cc = cc
        self.n = cc.n
        self.N = self.n * self.M
        self.nt = n_time or n_time_samples(k_harmonics)
        if self.nt <= 2 * k_harmonics:
            raise ConfigError("too few time samples for the harmonic count")
        self._build_linear()
        self._build_dft()
        self.cw = next(s for s in cc.sources if s.kind is Kind.CW_SOURCE)
        self.pag = next((s for s in cc.sources if s.kind is Kind.PAG_SOURCE), None)
        self.set_drive(net.cw_sources[0].power, None if pag is None else pag.power)

    # -- assembly -----------------------------------------------------------

    def col(self, node_idx: int, comp: int) -> int:
        return node_idx * self.M + comp

    def _build_linear(self):
        n, M = self.n, self.M
        J = np.zeros((self.N, self.N))
        y0 = admittance(self.cc, 0.0).real
        self.y_k = [y0.astype(complex)]
        for a in range(n):
            for b in range(n):
                J[a * M, b * M] = y0[a, b]
        for k in range(1, self.K + 1):
            y = admittance(self.cc, k * self.f0)
            self.y_k.append(y)
            re, im = 2 * k - 1, 2 * k
            for a in range(n):
                for b in range(n):
                    g, s = y[a, b].real, y[a, b].imag
                    J[a * M + re, b * M + re] = g
                    J[a * M + re, b * M + im] = -s
                    J[a * M + im, b * M + re] = s
                    J[a * M + im, b * M + im] = g
        self.j_lin = J

    def _build_dft(self):
        K, M, nt = self.K, self.M, self.nt
        th = 2.0 * math.pi * np.outer(np.arange(nt), np.arange(1, K + 1)) / nt
        B = np.empty((nt, M))
        A = np.empty((M, nt))
        B[:, 0] = 1.0
        A[0, :] = 1.0 / nt
        B[:, 1::2] = np.cos(th)
        B[:, 2::2] = -np.sin(th)
        A[1::2, :] = 2.0 / nt * np.cos(th).T
        A[2::2, :] = -2.0 / nt * np.sin(th).T
        W = np.zeros((M, M))
        w0 = 2.0 * math.pi * self.f0
        for k in range(1, K + 1):
            W[2 * k - 1, 2 * k] = -k * w0
            W[2 * k, 2 * k - 1] = k * w0
        self.A, self.B, self.W = A, B, W

    def set_drive(self, p_in: float, p_pag: float | None = None):
        """Update the source vector for new available powers."""
        self.p_in = p_in
        rhs = np.zeros(self.N)
        e_cw = math.sqrt(8.0 * p_in / self.cw.g)
        self._stamp_source(rhs, self.cw, e_cw, self.k_drive)
        self.e_cw = e_cw
        if self.pag is not None:
            if p_pag is None:
                p_pag = self.net.pag_source.power
            self.p_pag = p_pag
            self.e_pag = math.sqrt(8.0 * p_pag / self.pag.g)
            self._stamp_source(rhs, self.pag, self.e_pag, 1)
        self.rhs = rhs
        self.tol = TOL_REL * e_cw * self.cw.g + TOL_ABS

    def _stamp_source(self, rhs, s, emf, k):
        i = emf * s.g * s.rotation
        for node, sign in ((s.ia, 1.0), (s.ib, -1.0)):
            if node >= 0:
                rhs[self.col(node, 2 * k - 1)] += sign * i.real
                rhs[self.col(node, 2 * k)] += sign * i.imag

    # -- evaluation ---------------------------------------------------------

    def node_block(self, x: np.ndarray, idx: int) -> np.ndarray:
        if idx < 0:
            return np.zeros(self.M)
        return x[idx * self.M:(idx + 1) * self.M]

    def junction_voltage(self, x: np.ndarray, jn) -> np.ndarray:
        return self.node_block(x, jn.ia) - self.node_block(x, jn.ib)

    def residual(self, x: np.ndarray, jacobian: bool = True):
        F = self.j_lin @ x - self.rhs
        J = self.j_lin.copy() if jacobian else None
        M = self.M
        for jn in self.cc.junctions:
            m, vdc = jn.varactor.model, jn.varactor.v_dc
            v_t = self.B @ self.junction_voltage(x, jn)
            q = device.charge(m, vdc, v_t)
            ic, g = device.conduction(m, vdc, v_t)
            i_h = self.W @ (self.A @ q) + self.A @ ic
            if jacobian:
                c = device.capacitance(m, vdc, v_t)
                D = self.W @ (self.A * c) @ self.B + (self.A * g) @ self.B
            for node, sign in ((jn.ia, 1.0), (jn.ib, -1.0)):
                if node < 0:
                    continue
                F[node * M:(node + 1) * M] += sign * i_h
                if jacobian:
                    for other, s2 in ((jn.ia, 1.0), (jn.ib, -1.0)):
                        if other >= 0:
                            J[node * M:(node + 1) * M, other * M:(other + 1) * M] += sign * s2 * D
        return F, J

    def newton(self, x0: np.ndarray | None = None, max_iter: int = MAX_ITER):
        """Damped Newton from ``x0``; returns (x, converged, iterations, history, J)."""
        x = np.zeros(self.N) if x0 is None else np.array(x0, dtype=float)
        F, J = self.residual(x)
        norm = float(np.max(np.abs(F)))
        hist = [norm]
        for it in range(1, max_iter + 1):
            if norm < self.tol:
                return x, True, it - 1, hist, J
            try:
                dx = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            l2 = float(np.linalg.norm(F))
            while True:
                xn = x + lam * dx
                Fn, Jn = self.residual(xn)
                if np.all(np.isfinite(Fn)) and (np.linalg.norm(Fn) < l2 or lam < 1e-3):
                    break
                lam *= 0.5
                if lam < 1e-6:
                    break
            if not np.all(np.isfinite(Fn)):
                break
            x, F, J = xn, Fn, Jn
            norm = float(np.max(np.abs(F)))
            hist.append(norm)
        return x, norm < self.tol, len(hist) - 1, hist, J

    # -- post-processing ----------------------------------------------------

    def phasors(self, x: np.ndarray, idx: int) -> np.ndarray:
        blk = self.node_block(x, idx)
        out = np.empty(self.K + 1, dtype=complex)
        out[0] = blk[0]
        out[1:] = blk[1::2] + 1j * blk[2::2]
        return out

    def solution(self, x, converged, iterations, hist, J=None) -> HBSolution:
        cc = self.cc
        spectra = {node: HarmonicSpectrum(self.f0, self.phasors(x, i))
                   for node, i in cc.node_index.items()}
        jspec = {}
        v_peak = 0.0
        t = np.arange(self.nt * 4) / (self.nt * 4 * self.f0)
        for jn in cc.junctions:
            ph = self.phasors(x, jn.ia)
            if jn.ib >= 0:
                ph = ph - self.phasors(x, jn.ib)
            spec = HarmonicSpectrum(self.f0, ph)
            jspec[jn.name] = spec
            v_peak = max(v_peak, float(np.max(-spec.waveform(t))))
        # large-signal scattering at f_in on the first two ports
        kd = self.k_drive
        s21 = s11 = complex("nan")
        if len(cc.port_nodes) >= 1:
            z01 = cc.port_z0[0]
            a1 = self.e_cw / (2.0 * math.sqrt(z01))
            v1 = self.phasors(x, cc.port_nodes[0])[kd]
            s11 = complex(v1 / math.sqrt(z01) - a1) / a1
            if len(cc.port_nodes) >= 2:
                v2 = self.phasors(x, cc.port_nodes[1])[kd]
                s21 = complex(v2 / math.sqrt(cc.port_z0[1])) / a1
        p_sub = 0.0
        if self.pag is not None:
            s = self.pag
            v = self.phasors(x, s.ia)[1] - (self.phasors(x, s.ib)[1] if s.ib >= 0 else 0.0)
            i_r = (self.e_pag * s.rotation - v) * s.g
            p_sub = 0.5 * abs(i_r) ** 2 / s.g
        det_sign = 1.0
        if J is not None:
            det_sign = float(np.linalg.slogdet(J)[0])
        return HBSolution(p_in=self.p_in, f_in=self.f_in, f0=self.f0, x=np.array(x),
                          spectra=spectra, junction_spectra=jspec, diode_v_peak=v_peak,
                          p_sub=float(p_sub), s21_ls=s21, s11_ls=s11, converged=bool(converged),
                          iterations=iterations, residual=float(hist[-1]), det_sign=det_sign,
                          history=list(hist))

    def solve(self, init: np.ndarray | None = None, max_iter: int = MAX_ITER,
              raise_on_fail: bool = True) -> HBSolution:
        x, ok, it, hist, J = self.newton(init, max_iter)
        if not ok and raise_on_fail:
            raise ConvergenceError(
                f"harmonic balance did not converge in {it} iterations "
                f"(residual {hist[-1]:.3e} A, tolerance {self.tol:.3e} A)",
                history=hist, p_in=self.p_in)
        return self.solution(x, ok, it, hist, J)


def hb_solve(net: Netlist, f_in: float, p_in: float, k_harmonics: int = K_DEFAULT,
             init: np.ndarray | HBSolution | None = None, require_pag: bool = True) -> HBSolution:
    """Steady state of ``net`` driven by its cw-source at ``f_in`` with power ``p_in``."""
    prob = HBProblem(net.with_drive(f_in=f_in, p_in=p_in), f_in, k_harmonics, require_pag)
    if isinstance(init, HBSolution):
        init = init.x
    return prob.solve(init)

"""Synthesis of the shunt T-network from its four resonance conditions.

Node map of the generated netlist::

    1  port node (both ports, bias choke, transformer input capacitor)
    2  transformer output / Z_a tank
    3  star node joining Z_a, Z_b and Z_c
    4  between the Z_b tank and its DC-blocking capacitor
    5  between L_c and the varactor
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (BiasedVaractor, DesignPoint, Element, ImpedanceSet, Kind, Netlist, Port,
                   TransformerSpec, VaractorModel, capacitance_at_bias)
from .errors import DomainError, InfeasibleSynthesisError
from .linear import driving_point_impedance

C_BLK = 12e-12
L_BIAS = 1e-6
P_PAG = 1e-12  # -90 dBm
N_PORT, N_TX, N_STAR, N_B, N_X = 1, 2, 3, 4, 5

Z_A = ("LA", "CA")
Z_B = ("LB", "CB", "CBLK")
Z_C = ("LC", "X1")
FEED = ("V1", "A1", "port1", "port2", "LBT")

ROOT_RTOL = 1e-9
ROOT_MAXITER = 200


@dataclass(frozen=True)
class SynthesizedNetwork:
    """Component values of one synthesized shunt limiter."""

    l_a: float
    c_a: float
    l_b: float
    c_b: float
    l_c: float
    c_blk: float
    transformer: TransformerSpec
    c_tx: float
    c_in: float
    varactor: BiasedVaractor
    design: DesignPoint
    q_a: float | None = None  # Q of L_a when it differs from design.q_l
    residuals: tuple = (0.0, 0.0)

    def __post_init__(self):
        for name in ("l_a", "c_a", "l_b", "c_b", "l_c", "c_blk", "c_tx", "c_in"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        wd, wi = self.design.omega_d, self.design.omega_in
        if abs(self.l_a * self.c_a * wd**2 - 1.0) > 1e-9:
            raise DomainError("Z_a tank is not resonant at f_in_opt/2")
        if abs(self.l_b * self.c_b * wi**2 - 1.0) > 1e-9:
            raise DomainError("Z_b tank is not resonant at f_in_opt")

    @property
    def z_tx(self) -> float:
        return self.transformer.z_tx

    def netlist(self, f_in: float | None = None, p_in: float = 1e-6,
                p_pag: float = P_PAG, l_bias: float = L_BIAS) -> Netlist:
        """Netlist with a cw drive at ``f_in`` and the pAG probe at ``f_in/2``."""
        dp = self.design
        f_in = dp.f_in_opt if f_in is None else f_in
        f_ref = dp.f_in_opt
        q = None if math.isinf(dp.q_l) else dp.q_l
        q_a = q if self.q_a is None else self.q_a

        def ind(name, a, b, v, qq=q):
            return Element(name, Kind.INDUCTOR, a, b, v, q=qq, f_ref=None if qq is None else f_ref)

        def cap(name, a, b, v):
            return Element(name, Kind.CAPACITOR, a, b, v)

        els = [
            ind("LBT", N_PORT, 0, l_bias, None),
            cap("CIN", N_PORT, 0, self.c_in),
            ind("LT", N_PORT, N_TX, self.transformer.l_t),
            cap("CTX", N_TX, 0, self.c_tx),
            ind("LA", N_TX, N_STAR, self.l_a, q_a),
            cap("CA", N_TX, N_STAR, self.c_a),
            ind("LB", N_STAR, N_B, self.l_b),
            cap("CB", N_STAR, N_B, self.c_b),
            cap("CBLK", N_B, 0, self.c_blk),
            ind("LC", N_STAR, N_X, self.l_c),
            Element("X1", Kind.VARACTOR, N_X, 0, varactor=self.varactor, f_ref=f_ref,
                    model="smv"),
            Element("V1", Kind.CW_SOURCE, N_PORT, 0, f_in, power=p_in, z_src=dp.z0),
            Element("A1", Kind.PAG_SOURCE, N_PORT, 0, f_in / 2.0, power=p_pag, z_src=dp.z0),
        ]
        return Netlist(elements=tuple(els), ports=(Port(N_PORT, 0, dp.z0), Port(N_PORT, 0, dp.z0)),
                       models={"smv": self.varactor.model}, v_bias=self.varactor.v_dc,
                       f_ref=f_ref, title="shunt pFSL")

    def rebias(self, v_dc: float) -> "SynthesizedNetwork":
        """Same components with the varactor moved to a new DC bias."""
        dv = capacitance_at_bias(self.varactor.model, v_dc)
        return replace(self, varactor=dv)

    def scaled_zb(self, factor: float) -> "SynthesizedNetwork":
        """Z_b tank with L_b scaled by ``factor`` and C_b retuned to f_in_opt."""
        if not factor > 0:
            raise DomainError("scale factor must be positive")
        l_b = self.l_b * factor
        return replace(self, l_b=l_b, c_b=tank_capacitance(l_b, self.design.f_in_opt))

    def impedance_set(self, f_in: float | None = None) -> ImpedanceSet:
        net = self.netlist()
        f_in = self.design.f_in_opt if f_in is None else f_in
        return extract_impedances(net, f_in)


def extract_impedances(net: Netlist, f_in: float) -> ImpedanceSet:
    """Branch impedances seen from the star node and Z_in seen from the port node."""
    def z(excl, f):
        return driving_point_impedance(net, N_STAR, excl, f)

    f_d = f_in / 2.0
    return ImpedanceSet(
        z1_in=z(Z_B + Z_C, f_in), z2_in=z(Z_A + Z_C, f_in), z3_in=z(Z_A + Z_B, f_in),
        z1_d=z(Z_B + Z_C, f_d), z2_d=z(Z_A + Z_C, f_d), z3_d=z(Z_A + Z_B, f_d),
        z_in=driving_point_impedance(net, N_PORT, FEED, f_in),
    )


def tank_capacitance(l: float, f: float) -> float:
    """Capacitor resonating ``l`` at ``f``."""
    return 1.0 / (l * (2.0 * math.pi * f) ** 2)


def _residuals(dv, dp, tx, l_a, c_a, q_a, l_b, l_c):
    net = SynthesizedNetwork(l_a, c_a, l_b, tank_capacitance(l_b, dp.f_in_opt), l_c, C_BLK, tx,
                             tx.c_t, tx.c_t, dv, dp, q_a).netlist()
    f_in, f_d = dp.f_in_opt, dp.f_in_opt / 2.0
    z3_in = driving_point_impedance(net, N_STAR, Z_A + Z_B, f_in)
    z1_in = driving_point_impedance(net, N_STAR, Z_B + Z_C, f_in)
    z2_d = driving_point_impedance(net, N_STAR, Z_A + Z_C, f_d)
    z3_d = driving_point_impedance(net, N_STAR, Z_A + Z_B, f_d)
    s_in, s_d = z1_in + z3_in, z2_d + z3_d
    return np.array([s_in.imag, s_d.imag]), np.array([s_in.real, s_d.real])


def synthesize_network(dv: BiasedVaractor, dp: DesignPoint, z_tx: float, l_a_seed: float,
                       q_a: float | None = None) -> SynthesizedNetwork:
    """Solve (L_b, L_c) so both series loops resonate with L_a fixed to ``l_a_seed``.

    ``q_a`` optionally gives L_a its own quality factor (otherwise ``dp.q_l``).
    """
    if not z_tx > 0:
        raise DomainError("z_tx must be positive")
    if not l_a_seed > 0:
        raise DomainError("l_a_seed must be positive")
    wi, wd = dp.omega_in, dp.omega_d
    tx = TransformerSpec.at(z_tx, wi)
    l_a = l_a_seed
    c_a = tank_capacitance(l_a, dp.f_in_opt / 2.0)

    # lossless closed-form start: Z_a(w_in) = -j w_in L_a / 3, Z_b tank(w_d) = j 4/3 w_d L_b
    x_c = (1.0 / (wi * dv.c_v) + wi * l_a / 3.0) / wi
    x_b = (1.0 / (wd * dv.c_v) + 1.0 / (wd * C_BLK) - wd * x_c) / (wd * 4.0 / 3.0)
    x = np.array([max(x_b, 1e-10), max(x_c, 1e-10)]) * 1e9  # work in nH

    def f(xv):
        return _residuals(dv, dp, tx, l_a, c_a, q_a, xv[0] * 1e-9, xv[1] * 1e-9)

    r, re = f(x)
    for _ in range(ROOT_MAXITER):
        if np.all(np.abs(r) <= ROOT_RTOL * np.maximum(np.abs(re), 1.0)):
            break
        jac = np.empty((2, 2))
        for k in range(2):
            h = 1e-6 * max(abs(x[k]), 1e-3)
            xp = x.copy()
            xp[k] += h
            jac[:, k] = (f(xp)[0] - r) / h
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise InfeasibleSynthesisError("singular resonance Jacobian", residuals=tuple(r))
        lam = 1.0
        while lam > 1e-4:
            xn = x + lam * step
            if np.all(xn > 0):
                rn, ren = f(xn)
                if np.linalg.norm(rn) < np.linalg.norm(r) or lam <= 1e-3:
                    break
            lam *= 0.5
        else:
            raise InfeasibleSynthesisError("no positive (L_b, L_c) reduces the residuals",
                                           residuals=tuple(r))
        x, r, re = xn, rn, ren
    else:
        raise InfeasibleSynthesisError("resonance solve did not converge", residuals=tuple(r))
    if np.any(x <= 0):
        raise InfeasibleSynthesisError("no positive root for (L_b, L_c)", residuals=tuple(r))
    l_b, l_c = x * 1e-9
    return SynthesizedNetwork(l_a, c_a, l_b, tank_capacitance(l_b, dp.f_in_opt), l_c, C_BLK, tx,
                              tx.c_t, tx.c_t, dv, dp, q_a, residuals=(float(r[0]), float(r[1])))


# prototype defaults: 2.1 GHz, 31 ohm inverter, 11 nH half-frequency tank. L_a gets a
# lower Q than the rest so that some f_d power reaches the ports (see P_sub).
PROTO_F = 2.1e9
PROTO_ZTX = 31.0
PROTO_LA = 11e-9
PROTO_VDC = 1.1
PROTO_QL = 2000.0
PROTO_QA = 300.0


def prototype(v_dc: float = PROTO_VDC, q_l: float = PROTO_QL, q_a: float | None = PROTO_QA,
              z_tx: float = PROTO_ZTX, l_a_seed: float = PROTO_LA, f_opt: float = PROTO_F,
              model: VaractorModel | None = None) -> SynthesizedNetwork:
    """The 2.1 GHz reference design synthesized around the default varactor model."""
    dv = capacitance_at_bias(model or VaractorModel(), v_dc)
    return synthesize_network(dv, DesignPoint(z0=50.0, f_in_opt=f_opt, q_l=q_l), z_tx,
                              l_a_seed, q_a)

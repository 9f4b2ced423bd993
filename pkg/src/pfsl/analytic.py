"""Closed-form threshold, insertion-loss and peak-power design formulas.

Scalar entry points take the domain types from :mod:`pfsl.core`; the underscored
kernels accept numpy arrays so the contour grids are evaluated in one shot.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .core import (AnalyticLosses, BiasedVaractor, DesignPoint, ImpedanceSet, TWO_PI,
                   VaractorModel, capacitance_at_bias)
from .errors import DomainError, SingularImpedanceError

# dB per neper of amplitude: 20 log10(x) = DB_PER_NEPER * ln(x)
DB_PER_NEPER = 20.0 / math.log(10.0)


@dataclass(frozen=True)
class PerformanceMetrics:
    """Analytic figures of merit of one design (SI; ``il_ss`` is a power ratio)."""

    p_th: float
    il_ss: float
    p_max: float
    v_th: float

    def __post_init__(self):
        if not self.p_th > 0:
            raise DomainError("p_th must be positive")
        if not self.il_ss >= 1.0:
            raise DomainError("il_ss is a loss factor and must be >= 1")

    @property
    def il_ss_db(self) -> float:
        return 10.0 * math.log10(self.il_ss)


# --------------------------------------------------------------------------
# array kernels


def _pth_closed(c_v, q_v, delta, z0, w, z_tx):
    return (z0 + 2.0 * c_v * q_v * z_tx**2 * w) ** 2 / (2.0 * q_v**4 * z0**3 * delta**2)


def _il_closed_db(c_v, q_v, z0, w, z_tx):
    # 20 log10(1 + z0/(2 Z_in)) with log1p: IL is tiny for large Z_in
    return DB_PER_NEPER * np.log1p(z0 / (2.0 * c_v * q_v * z_tx**2 * w))


def _pmax_closed(v_dc, v_bi, c_v, q_v, z0, w, z_tx):
    return ((v_dc + v_bi) ** 2 * (2.0 * c_v * q_v * w * z_tx**2 + z0) ** 2
            / (8.0 * q_v**2 * z0 * z_tx**2))


# --------------------------------------------------------------------------
# scalar operations


def geq(z1: complex, z2: complex, z3: complex) -> complex:
    """Determinant-like combination z2*z3 + z1*(z2 + z3) of a three-branch star."""
    return z2 * z3 + z1 * (z2 + z3)


def pth_full(imps: ImpedanceSet, dv: BiasedVaractor, dp: DesignPoint) -> tuple[float, float]:
    """Threshold from the full branch-impedance expression.

    Returns ``(p_th, v_th)`` where ``v_th`` is the peak EMF of a ``z0`` generator
    whose available power is ``p_th``.
    """
    den_d = imps.z1_d + imps.z2_d
    if den_d == 0 or imps.z2_in == 0:
        raise SingularImpedanceError("z1_d + z2_d or z2_in vanishes")
    w = dp.omega_in
    g_in = geq(imps.z1_in, imps.z2_in, imps.z3_in)
    g_d = geq(imps.z1_d, imps.z2_d, imps.z3_d)
    ratio = g_d * g_in * w**2 / (den_d * imps.z2_in)
    p_th = dv.c_v**4 / (2.0 * dp.z0 * dv.delta**2) * abs(ratio) ** 2
    return p_th, math.sqrt(8.0 * dp.z0 * p_th)


def pth_resonant(losses: AnalyticLosses, dv: BiasedVaractor, dp: DesignPoint) -> float:
    """Threshold when both series loops are resonant: set by R_p*R_d only."""
    return dv.c_v**4 / (2.0 * dp.z0 * dv.delta**2) * (losses.r_p * losses.r_d * dp.omega_in**2) ** 2


def rp_from_ztx(r_s: float, z_tx: float, z0: float) -> float:
    """Loop resistance with the two port loads seen through a lossless inverter."""
    if r_s < 0 or z_tx < 0 or not z0 > 0:
        raise DomainError("r_s, z_tx must be >= 0 and z0 > 0")
    return r_s + 2.0 * z_tx**2 / z0


def rs_approx(dv: BiasedVaractor, dp: DesignPoint) -> float:
    """Diode-dominated loop resistance 1/(w C_v Q_v)."""
    return 1.0 / (dp.omega_in * dv.c_v * dv.model.q_v)


def rs_exact(dv: BiasedVaractor, dp: DesignPoint) -> float:
    """Loop resistance including the passive-component Q (``q_l = inf`` drops it)."""
    return (1.0 / (dp.omega_in * dv.c_v)) * (1.0 / dp.q_l + 1.0 / dv.model.q_v)


def rs_rd(dv: BiasedVaractor, dp: DesignPoint, z_tx: float, exact: bool = True) -> AnalyticLosses:
    """Equal series losses of the two loops and the transformed input-path resistance."""
    r = rs_exact(dv, dp) if exact else rs_approx(dv, dp)
    return AnalyticLosses(r_s=r, r_d=r, r_p=rp_from_ztx(r, z_tx, dp.z0))


def pth_approx(dv: BiasedVaractor, dp: DesignPoint, z_tx: float) -> float:
    """Minimum threshold in closed form from C_v, Q_v, delta and Z_tx."""
    if not z_tx > 0:
        raise DomainError("z_tx must be positive")
    return float(_pth_closed(dv.c_v, dv.model.q_v, dv.delta, dp.z0, dp.omega_in, z_tx))


def zin_resonant(r_s, z_tx: float) -> float:
    """Real input impedance z_tx**2 / r_s of the resonant shunt branch.

    ``r_s`` may be an :class:`AnalyticLosses`; ``r_s == 0`` returns ``inf``
    (open circuit).
    """
    if isinstance(r_s, AnalyticLosses):
        r_s = r_s.r_s
    if r_s < 0:
        raise DomainError("r_s must be >= 0")
    if r_s == 0:
        return math.inf
    return z_tx**2 / r_s


def il_ss(z_in: complex, z0: float) -> tuple[float, float]:
    """Insertion loss of a shunt ``z_in`` across a ``z0`` line: (power ratio, dB)."""
    if z_in == 0 or z_in + z0 / 2.0 == 0:
        raise SingularImpedanceError("shunt impedance shorts the line")
    if isinstance(z_in, float) and math.isinf(z_in):
        return 1.0, 0.0
    u = z0 / (2.0 * complex(z_in))
    excess = 2.0 * u.real + abs(u) ** 2  # |1 + u|**2 - 1
    return 1.0 + excess, 0.5 * DB_PER_NEPER * math.log1p(excess)


def il_from_rs_db(r_s: float, z_tx: float, z0: float) -> float:
    """Insertion loss in dB of the resonant branch with series loss ``r_s``."""
    return DB_PER_NEPER * math.log1p(r_s * z0 / (2.0 * z_tx**2))


def il_closed_db(dv: BiasedVaractor, dp: DesignPoint, z_tx: float) -> float:
    """Minimum small-signal insertion loss in dB from C_v, Q_v and Z_tx."""
    return float(_il_closed_db(dv.c_v, dv.model.q_v, dp.z0, dp.omega_in, z_tx))


def pmax_approx(dv: BiasedVaractor, dp: DesignPoint, z_tx: float) -> float:
    """Drive power at which the diode swing reaches V_DC + V_bi."""
    if not z_tx > 0:
        raise DomainError("z_tx must be positive")
    return float(_pmax_closed(dv.v_dc, dv.model.v_bi, dv.c_v, dv.model.q_v,
                              dp.z0, dp.omega_in, z_tx))


def performance(dv: BiasedVaractor, dp: DesignPoint, z_tx: float) -> PerformanceMetrics:
    p = pth_approx(dv, dp, z_tx)
    il_db = il_closed_db(dv, dp, z_tx)
    return PerformanceMetrics(p_th=p, il_ss=10.0 ** (il_db / 10.0),
                              p_max=pmax_approx(dv, dp, z_tx),
                              v_th=math.sqrt(8.0 * dp.z0 * p))


# --------------------------------------------------------------------------
# contour grids

AXES = ("c_v", "z_tx", "v_dc", "f_in")
METRICS = ("p_th", "il_ss", "p_max")


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.name not in AXES:
            raise DomainError(f"unknown axis {self.name!r}; expected one of {AXES}")
        lo_ok = self.start >= 0 if self.name == "v_dc" else self.start > 0
        if self.steps == 1:
            # degenerate single-point axis
            if not (lo_ok and self.stop == self.start):
                raise DomainError(f"axis {self.name}: a single step needs start == stop")
            return
        if not (lo_ok and self.stop > self.start):
            raise DomainError(f"axis {self.name}: range must be positive and ordered")
        if self.steps < 1:
            raise DomainError(f"axis {self.name}: need at least one step")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class Grid:
    """Metric sampled on ``x`` (first axis) by ``y`` (second axis).

    ``values[i, j]`` belongs to ``(x[i], y[j])``; ``p_th``/``p_max`` are in W,
    ``il_ss`` in dB. Cells where the model is undefined hold NaN.
    """

    metric: str
    x_name: str
    y_name: str
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    nan_count: int

    def rows(self):
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                yield float(xv), float(yv), float(self.values[i, j])

    def nearest(self, x: float, y: float) -> tuple[float, float, float]:
        i = int(np.argmin(np.abs(self.x - x)))
        j = int(np.argmin(np.abs(self.y - y)))
        return float(self.x[i]), float(self.y[j]), float(self.values[i, j])


def contour_grid(metric: str, axis1: Axis, axis2: Axis, dv: BiasedVaractor,
                 dp: DesignPoint, z_tx: float = 31.0, track_bias: bool = True) -> Grid:
    """Evaluate a closed-form metric over a two-axis grid.

    Axes not swept take their value from ``dv``, ``dp`` and ``z_tx``. When a
    ``v_dc`` axis is swept with ``track_bias`` the capacitance and slope follow
    the varactor C-V law at each bias; with ``track_bias=False`` only the voltage
    headroom changes (the fixed-C_v view of the peak-power chart).
    """
    if metric not in METRICS:
        raise DomainError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if axis1.name == axis2.name:
        raise DomainError("the two axes must differ")
    names = {axis1.name, axis2.name}
    if track_bias and names == {"c_v", "v_dc"}:
        raise DomainError("c_v cannot be swept independently of a tracked v_dc axis")

    X, Y = np.meshgrid(axis1.values(), axis2.values(), indexing="ij")
    p = {"c_v": np.full(X.shape, dv.c_v), "delta": np.full(X.shape, dv.delta),
         "z_tx": np.full(X.shape, float(z_tx)), "v_dc": np.full(X.shape, dv.v_dc),
         "f_in": np.full(X.shape, dp.f_in_opt)}
    p[axis1.name] = X
    p[axis2.name] = Y
    nan_mask = np.zeros(X.shape, dtype=bool)
    if "v_dc" in names and track_bias:
        m = dv.model
        v = p["v_dc"]
        nan_mask |= (v < 0) | (v >= m.v_breakdown)
        vs = np.where(nan_mask, 0.0, v)
        c_j = m.c_j0 / (1.0 + vs / m.v_j) ** m.gamma
        p["c_v"] = m.c_pkg + c_j
        p["delta"] = m.gamma * c_j / (m.v_j + vs) / p["c_v"]
    w = TWO_PI * p["f_in"]
    q_v = dv.model.q_v
    with np.errstate(all="ignore"):
        if metric == "p_th":
            out = _pth_closed(p["c_v"], q_v, p["delta"], dp.z0, w, p["z_tx"])
        elif metric == "il_ss":
            out = _il_closed_db(p["c_v"], q_v, dp.z0, w, p["z_tx"])
        else:
            out = _pmax_closed(p["v_dc"], dv.model.v_bi, p["c_v"], q_v, dp.z0, w, p["z_tx"])
    out = np.where(nan_mask | ~np.isfinite(out), np.nan, out)
    return Grid(metric=metric, x_name=axis1.name, y_name=axis2.name,
                x=axis1.values(), y=axis2.values(), values=out,
                nan_count=int(np.isnan(out).sum()))


def fixed_varactor(c_v: float, delta: float, q_v: float = 15.0, v_dc: float = 1.1,
                   v_bi: float = 0.7) -> BiasedVaractor:
    """A BiasedVaractor pinned to given (C_v, delta) irrespective of the C-V law."""
    model = VaractorModel.for_target(c_v, v_dc, q_v=q_v, v_bi=v_bi,
                                     c_pkg=min(VaractorModel.c_pkg, 0.2 * c_v))
    base = capacitance_at_bias(model, v_dc)
    return dataclasses.replace(base, c_v=c_v, delta=delta)

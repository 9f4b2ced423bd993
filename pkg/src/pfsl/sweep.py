"""Warm-started power sweeps on top of the harmonic-balance solver, and the
metrics read off them (threshold, P_max markers, interference suppression).

A Newton solver started from the previous sweep point keeps following the
symmetric (undivided) branch after it loses stability, because that branch
still exists as an unstable steady state. The tracker therefore watches the
sign of the HB Jacobian determinant: once it differs from the small-signal
sign, the solution is pushed along the Jacobian's critical eigenvector (the
one belonging to the eigenvalue closest to zero) and re-solved, which lands on
the period-doubled branch. Whether a point is divided is then judged only by
its f_d content, and the threshold is still read from P_sub.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BiasedVaractor, Element, Kind, Netlist, Port
from .errors import ConfigError, ConvergenceError, NoBifurcationError, TraceError
from .synthesis import SynthesizedNetwork
from .linear import sparams
from .hb import K_DEFAULT, TOL_ABS, TOL_REL, HBProblem, HBSolution
from .units import dbm_to_w, w_to_dbm

P_SUB_FLOOR = 1e-9  # -60 dBm
MAX_HALVINGS = 4  # step_db / 16
SUB_RATIO_MIN = 1e-2  # junction |V(f_d)| / |V(f_in)| above which a point counts as divided
PERTURB_VOLTS = (0.3, 0.6, 1.0, 1.5, 2.0, 3.0)
N_CRITICAL = 2
BISECT_DB = 0.1
N_PLATEAU = 5


@dataclass(frozen=True)
class SweepRecord:
    """Per-point summary of a converged (or flagged) HB solution."""

    p_in: float
    s21: complex
    s11: complex
    p_sub: float
    diode_v_peak: float
    sub_ratio: float
    divided: bool
    converged: bool
    iterations: int
    residual: float
    substeps: int = 1

    @property
    def s21_db(self) -> float:
        return 20.0 * math.log10(max(abs(self.s21), 1e-300))

    @property
    def s11_db(self) -> float:
        return 20.0 * math.log10(max(abs(self.s11), 1e-300))

    @property
    def il_db(self) -> float:
        return -self.s21_db


@dataclass(frozen=True)
class SweepTrace:
    records: tuple
    direction: str = "up"
    metadata: dict = field(default_factory=dict)
    states: tuple = field(default=(), compare=False, repr=False)
    net: Netlist | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.direction not in ("up", "down"):
            raise ConfigError(f"direction must be 'up' or 'down', not {self.direction!r}")
        p = np.array([r.p_in for r in self.records])
        d = np.diff(p)
        if len(p) > 1 and not (np.all(d > 0) if self.direction == "up" else np.all(d < 0)):
            raise TraceError(f"p_in is not strictly monotone in the {self.direction} direction")

    def __len__(self):
        return len(self.records)

    def _col(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def p_in(self) -> np.ndarray:
        return self._col("p_in")

    @property
    def p_in_dbm(self) -> np.ndarray:
        return np.array([w_to_dbm(p) for p in self.p_in])

    @property
    def p_sub(self) -> np.ndarray:
        return self._col("p_sub")

    @property
    def s21_db(self) -> np.ndarray:
        return self._col("s21_db")

    @property
    def s11_db(self) -> np.ndarray:
        return self._col("s11_db")

    @property
    def il_db(self) -> np.ndarray:
        return self._col("il_db")

    @property
    def v_peak(self) -> np.ndarray:
        return self._col("diode_v_peak")

    @property
    def divided(self) -> np.ndarray:
        return self._col("divided")

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.records)

    def ascending(self) -> "SweepTrace":
        """The same trace ordered by increasing power."""
        if self.direction == "up":
            return self
        st = tuple(reversed(self.states)) if self.states else ()
        return SweepTrace(tuple(reversed(self.records)), "up", dict(self.metadata), st, self.net)


class BranchTracker:
    """HB solves with automatic switching onto the period-doubled branch."""

    def __init__(self, net: Netlist, f_in: float, k_harmonics: int = K_DEFAULT,
                 require_pag: bool = True, branch_switch: bool = True):
        self.prob = HBProblem(net, f_in, k_harmonics, require_pag=require_pag)
        self.branch_switch = branch_switch and self.prob.pag is not None
        _, j0 = self.prob.residual(np.zeros(self.prob.N))
        self.ref_count = _negative_real_count(np.linalg.eigvals(j0))

    def sub_ratio(self, x: np.ndarray) -> float:
        prob = self.prob
        if prob.pag is None:
            return 0.0
        kd = prob.k_drive
        best = 0.0
        for jn in prob.cc.junctions:
            v = prob.junction_voltage(x, jn)
            sub = math.hypot(v[1], v[2])
            drv = math.hypot(v[2 * kd - 1], v[2 * kd])
            best = max(best, sub / max(drv, 1e-30))
        return best

    def _junction_sub(self, x: np.ndarray) -> float:
        prob = self.prob
        return max((math.hypot(*prob.junction_voltage(x, jn)[1:3]) for jn in prob.cc.junctions),
                   default=0.0)

    def unstable(self, x: np.ndarray) -> bool:
        """True when a real Jacobian eigenvalue has crossed zero since small signal."""
        _, J = self.prob.residual(x)
        return _negative_real_count(np.linalg.eigvals(J)) != self.ref_count

    def _switch(self, sol: HBSolution) -> HBSolution | None:
        # try the critical eigenvectors and, for (near-)degenerate pairs as in
        # identical cascaded stages, their sum and difference; keep the divided
        # state that couples most f_d power into the pAG port
        prob = self.prob
        _, J = prob.residual(sol.x)
        w, vecs = np.linalg.eig(J)
        crit = [np.real(vecs[:, i]) for i in np.argsort(np.abs(w))[:N_CRITICAL]]
        dirs = list(crit)
        if len(crit) == 2:
            dirs += [crit[0] + crit[1], crit[0] - crit[1]]
        best = None
        for phi in dirs:
            a0 = self._junction_sub(phi)
            if a0 < 1e-12:
                continue
            for amp in PERTURB_VOLTS:
                st = prob.solve(sol.x + phi * (amp / a0), raise_on_fail=False)
                if st.converged and self.sub_ratio(st.x) > SUB_RATIO_MIN:
                    if best is None or st.p_sub > best.p_sub * (1.0 + 1e-9):
                        best = st
                    break
        return best

    def solve(self, p_in: float, x0: np.ndarray | None) -> HBSolution:
        """Solve at ``p_in`` from ``x0``; leave an unstable undivided state if possible."""
        self.prob.set_drive(p_in)
        sol = self.prob.solve(x0, raise_on_fail=False)
        if (sol.converged and self.branch_switch and self.sub_ratio(sol.x) <= SUB_RATIO_MIN
                and self.unstable(sol.x)):
            alt = self._switch(sol)
            if alt is not None:
                return alt
        return sol

    def advance(self, p_from: float, x_from: np.ndarray | None, p_to: float):
        """Move from a solved state to ``p_to``, halving the step on failure.

        Returns (solution, substeps); substeps is 0 when even the finest
        subdivision failed.
        """
        a, b = w_to_dbm(p_from), w_to_dbm(p_to)
        sol = None
        for h in range(MAX_HALVINGS + 1):
            n = 2 ** h
            x = x_from
            ok = True
            for p in np.linspace(a, b, n + 1)[1:]:
                sol = self.solve(dbm_to_w(p), x)
                if not sol.converged:
                    ok = False
                    break
                x = sol.x
            if ok:
                return sol, n
        # last resort: cold start at the target
        cold = self.solve(p_to, None)
        if cold.converged:
            return cold, 2 ** MAX_HALVINGS
        return sol, 0

    def record(self, sol: HBSolution, substeps: int) -> SweepRecord:
        r = self.sub_ratio(sol.x)
        return SweepRecord(p_in=sol.p_in, s21=sol.s21_ls, s11=sol.s11_ls, p_sub=sol.p_sub,
                           diode_v_peak=sol.diode_v_peak, sub_ratio=r,
                           divided=r > SUB_RATIO_MIN, converged=sol.converged,
                           iterations=sol.iterations, residual=sol.residual, substeps=substeps)


def _negative_real_count(w: np.ndarray) -> int:
    real = np.abs(w.imag) <= 1e-9 * np.maximum(np.abs(w), 1e-300)
    return int(np.sum(real & (w.real < 0)))


def _power_grid(p_start: float, p_stop: float, step_db: float) -> np.ndarray:
    a, b = w_to_dbm(p_start), w_to_dbm(p_stop)
    n = int(math.floor((b - a) / step_db + 1e-9))
    grid = a + step_db * np.arange(n + 1)
    if b - grid[-1] > 1e-9:
        grid = np.append(grid, b)
    return grid


def power_sweep(net: Netlist, f_in: float, p_start: float, p_stop: float, step_db: float = 1.0,
                k_harmonics: int = K_DEFAULT, direction: str = "up", require_pag: bool = True,
                branch_switch: bool = True, init: np.ndarray | None = None) -> SweepTrace:
    """Sweep the cw power between ``p_start`` and ``p_stop`` (watts).

    Each point starts from the previous converged state. A point that fails
    is retried with the step halved down to ``step_db/16`` and then flagged.
    A down-sweep first climbs to ``p_stop`` (unrecorded) unless ``init`` is given.
    """
    if not (0 < p_start < p_stop):
        raise ConfigError("need 0 < p_start < p_stop")
    if not step_db > 0:
        raise ConfigError("step_db must be positive")
    if direction not in ("up", "down"):
        raise ConfigError(f"direction must be 'up' or 'down', not {direction!r}")
    tr = BranchTracker(net, f_in, k_harmonics, require_pag, branch_switch)
    grid = _power_grid(p_start, p_stop, step_db)
    x = init
    if direction == "down":
        grid = grid[::-1]
        if x is None:
            climb = _power_grid(p_start, p_stop, 2.0 * step_db)
            p_prev = None
            for p in climb:
                if p_prev is None:
                    sol, n = tr.solve(dbm_to_w(p), None), 1
                else:
                    sol, n = tr.advance(dbm_to_w(p_prev), x, dbm_to_w(p))
                if sol.converged:
                    x, p_prev = sol.x, p
    records, states = [], []
    p_prev = None
    for i, p in enumerate(grid):
        if p_prev is None or x is None:
            sol = tr.solve(dbm_to_w(p), x)
            n = 1 if sol.converged else 0
        else:
            sol, n = tr.advance(dbm_to_w(p_prev), x, dbm_to_w(p))
        if i == 0 and not sol.converged:
            raise ConvergenceError(
                f"first sweep point {p:.2f} dBm did not converge (residual {sol.residual:.3e} A)",
                history=sol.history, p_in=sol.p_in)
        records.append(tr.record(sol, n))
        if sol.converged:
            x, p_prev = sol.x, p
            states.append(sol.x)
        else:
            states.append(None)
    meta = {"f_in": f_in, "netlist": net.digest(), "k_harmonics": k_harmonics,
            "tol_rel": TOL_REL, "tol_abs": TOL_ABS, "step_db": step_db,
            "branch_switch": tr.branch_switch}
    return SweepTrace(tuple(records), direction, meta, tuple(states), net)


def _tracker_for(trace: SweepTrace) -> BranchTracker:
    m = trace.metadata
    return BranchTracker(trace.net, m["f_in"], m.get("k_harmonics", K_DEFAULT),
                         branch_switch=m.get("branch_switch", True))


def extract_pth(trace: SweepTrace, floor: float = P_SUB_FLOOR, refine: bool = True,
                tol_db: float = BISECT_DB) -> float:
    """Lowest drive power at which P_sub exceeds ``floor`` (watts).

    With ``refine`` and a trace that still carries its netlist and states, the
    bracketing interval is bisected to ``tol_db``; otherwise the crossing is
    interpolated in dB between the two bracketing points.
    """
    if trace.direction != "up":
        raise TraceError("threshold extraction needs an ascending trace")
    if not trace.all_converged:
        raise TraceError("threshold extraction needs a fully converged trace")
    above = np.nonzero(trace.p_sub > floor)[0]
    if len(above) == 0:
        raise NoBifurcationError(
            f"P_sub never exceeds {w_to_dbm(floor):.1f} dBm "
            f"(max {w_to_dbm(max(trace.p_sub.max(), 1e-300)):.1f} dBm)")
    i = int(above[0])
    if i == 0:
        return float(trace.p_in[0])
    lo, hi = trace.p_in_dbm[i - 1], trace.p_in_dbm[i]
    x_lo = trace.states[i - 1] if trace.states else None
    if refine and trace.net is not None and x_lo is not None:
        tr = _tracker_for(trace)
        while hi - lo > tol_db:
            mid = 0.5 * (lo + hi)
            sol = tr.solve(dbm_to_w(mid), x_lo)
            if sol.converged and sol.p_sub > floor:
                hi = mid
            else:
                lo = mid
                if sol.converged:
                    x_lo = sol.x
        return dbm_to_w(hi)
    a, b = w_to_dbm(max(trace.p_sub[i - 1], 1e-300)), w_to_dbm(trace.p_sub[i])
    t = (w_to_dbm(floor) - a) / (b - a) if b != a else 1.0
    return dbm_to_w(lo + t * (hi - lo))


@dataclass(frozen=True)
class PmaxEstimate:
    """Peak-voltage P_max with the S21/S11 phenomenological markers.

    When the peak-voltage level is never reached ``p_max`` is ``inf`` and
    ``criterion_met`` is False; ``v_peak_max`` then says how close it came.
    """

    p_max: float
    criterion_met: bool
    level: float
    v_peak_max: float
    p_s21_marker: float | None = None
    p_s11_marker: float | None = None

    @property
    def p_max_dbm(self) -> float:
        return w_to_dbm(self.p_max) if math.isfinite(self.p_max) else math.inf


def _local_extremum(p_dbm: np.ndarray, y: np.ndarray, start: int, sign: float):
    """First interior local maximum of ``sign*y`` at index >= start, parabola-refined."""
    z = sign * y
    for i in range(max(start, 1), len(z) - 1):
        if z[i] > z[i - 1] and z[i] >= z[i + 1]:
            x0, x1, x2 = p_dbm[i - 1:i + 2]
            y0, y1, y2 = z[i - 1:i + 2]
            den = (x0 - x1) * (x0 - x2) * (x1 - x2)
            a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
            b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
            if a < 0:
                return float(np.clip(-b / (2 * a), x0, x2))
            return float(x1)
    return None


def extract_pmax(trace: SweepTrace, dv: BiasedVaractor, p_th: float | None = None) -> PmaxEstimate:
    """Lowest drive at which the junction's forward excursion reaches V_DC + V_bi."""
    trace = trace.ascending()
    level = dv.v_dc + dv.model.v_bi
    p_dbm, vpk = trace.p_in_dbm, trace.v_peak
    hit = np.nonzero(vpk >= level)[0]
    if p_th is None:
        try:
            p_th = extract_pth(trace, refine=False)
        except (NoBifurcationError, TraceError):
            p_th = None
    s21_m = s11_m = None
    if p_th is not None:
        start = int(np.searchsorted(p_dbm, w_to_dbm(p_th), side="right"))
        s21_m = _local_extremum(p_dbm, trace.s21_db, start, +1.0)
        s11_m = _local_extremum(p_dbm, trace.s11_db, start, -1.0)
    s21_m = None if s21_m is None else dbm_to_w(s21_m)
    s11_m = None if s11_m is None else dbm_to_w(s11_m)
    vmax = float(vpk.max()) if len(vpk) else 0.0
    if len(hit) == 0:
        return PmaxEstimate(math.inf, False, level, vmax, s21_m, s11_m)
    i = int(hit[0])
    if i == 0:
        p = p_dbm[0]
    else:
        t = (level - vpk[i - 1]) / (vpk[i] - vpk[i - 1])
        p = p_dbm[i - 1] + t * (p_dbm[i] - p_dbm[i - 1])
    return PmaxEstimate(dbm_to_w(p), True, level, vmax, s21_m, s11_m)


@dataclass(frozen=True)
class IsReport:
    p_th: float
    p_max: float
    is_max_below_pmax: float
    il_ss: float
    p_in_dbm: np.ndarray = field(repr=False)
    is_db: np.ndarray = field(repr=False)

    def is_at(self, p_in: float) -> float:
        """IS (dB) at ``p_in`` watts, linear in dB between sweep points."""
        p = w_to_dbm(p_in)
        if not (self.p_in_dbm[0] - 1e-9 <= p <= self.p_in_dbm[-1] + 1e-9):
            raise TraceError(f"{p:.2f} dBm is outside the trace")
        return float(np.interp(p, self.p_in_dbm, self.is_db))


def is_report(trace: SweepTrace, dv: BiasedVaractor, floor: float = P_SUB_FLOOR,
              p_th: float | None = None) -> IsReport:
    """Interference suppression relative to the low-power insertion loss.

    The plateau is the mean loss over the lowest ``N_PLATEAU`` undivided points
    below threshold (all of them when the trace has fewer).
    """
    trace = trace.ascending()
    if len(trace) < N_PLATEAU + 1:
        raise TraceError(f"IS needs at least {N_PLATEAU + 1} sweep points")
    il = trace.il_db
    p_dbm = trace.p_in_dbm
    if p_th is None:
        try:
            p_th = extract_pth(trace, floor, refine=False)
        except NoBifurcationError:
            p_th = math.inf
    quiet = ~trace.divided
    if math.isfinite(p_th):
        quiet &= p_dbm < w_to_dbm(p_th)
    below = np.nonzero(quiet)[0]
    if len(below) == 0:
        raise TraceError("the trace starts above the threshold; no small-signal plateau")
    il_ss = float(np.mean(il[below[:N_PLATEAU]]))
    is_db = il - il_ss
    pm = extract_pmax(trace, dv, p_th if math.isfinite(p_th) else None)
    p_max = pm.p_max
    if math.isfinite(p_th):
        hi = w_to_dbm(p_max) if math.isfinite(p_max) else math.inf
        sel = (p_dbm >= w_to_dbm(p_th) - 1e-9) & (p_dbm < hi)
        is_max = float(is_db[sel].max()) if sel.any() else math.nan
    else:
        is_max = math.nan
    return IsReport(p_th, p_max, is_max, il_ss, p_dbm, is_db)


@dataclass(frozen=True)
class FrequencySweep:
    """Large-signal S21 over frequency at one drive power, with the small-signal
    S21 of the same netlist for reference."""

    p_in: float
    frequencies: np.ndarray
    s21: np.ndarray
    s21_ss: np.ndarray
    divided: np.ndarray
    converged: np.ndarray

    @property
    def s21_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(np.abs(self.s21), 1e-300))

    @property
    def suppression_db(self) -> np.ndarray:
        """Extra loss over the small-signal response, per frequency."""
        return 20.0 * np.log10(np.maximum(np.abs(self.s21_ss), 1e-300)) - self.s21_db

    @property
    def notch_index(self) -> int:
        return int(np.argmax(self.suppression_db))

    @property
    def notch_frequency(self) -> float:
        return float(self.frequencies[self.notch_index])

    @property
    def notch_depth_db(self) -> float:
        return float(self.suppression_db[self.notch_index])


def sweep_frequency_at_power(net: Netlist, f_start: float, f_stop: float, n: int, p_in: float,
                             k_harmonics: int = K_DEFAULT, p_ramp_start: float = dbm_to_w(-10.0),
                             ramp_step_db: float = 2.0) -> FrequencySweep:
    """Large-signal S21 versus drive frequency at a fixed available power.

    Each frequency is reached by continuation from the neighbouring one; if
    that fails the point is rebuilt by a power ramp from ``p_ramp_start``.
    """
    if not (0 < f_start < f_stop):
        raise ConfigError("need 0 < f_start < f_stop")
    if n < 2:
        raise ConfigError("need at least two frequency points")
    freqs = np.linspace(f_start, f_stop, n)
    s21_ss = np.array([sparams(net, f).s21 for f in freqs])
    s21 = np.empty(n, dtype=complex)
    div = np.zeros(n, dtype=bool)
    conv = np.zeros(n, dtype=bool)
    x = None
    for i, f in enumerate(freqs):
        tr = BranchTracker(net, f, k_harmonics)
        sol = tr.solve(p_in, x) if x is not None else None
        if sol is None or not sol.converged:
            xr = None
            p0 = min(p_ramp_start, p_in)
            for p in _power_grid(p0, p_in, ramp_step_db) if p_in > p0 else [w_to_dbm(p_in)]:
                sol, _ = (tr.solve(dbm_to_w(p), None), 1) if xr is None else \
                    tr.advance(dbm_to_w(p_prev), xr, dbm_to_w(p))
                if sol.converged:
                    xr, p_prev = sol.x, p
        rec = tr.record(sol, 1)
        s21[i], div[i], conv[i] = rec.s21, rec.divided, rec.converged
        if sol.converged:
            x = sol.x
    return FrequencySweep(p_in, freqs, s21, s21_ss, div, conv)


def cascade_stages(net: Netlist, m: int) -> Netlist:
    """Chain ``m`` copies of a two-port netlist, port 2 of each into port 1 of the next.

    The copies' own cw-source and pAG are dropped; one cw-source drives the
    first input and one pAG sits on the last output.
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    if len(net.ports) != 2:
        raise ConfigError(f"cascading needs a two-port netlist, got {len(net.ports)} ports")
    cw, pag = net.cw_sources, net.pag_source
    p1, p2 = net.ports
    if p1.ref != 0 or p2.ref != 0:
        raise ConfigError("cascading needs ground-referenced ports")
    drop = {e.name for e in net.elements if e.is_source}
    nodes = sorted(n for n in net.nodes if n != 0)
    top = max(nodes) if nodes else 0
    els = []
    prev_out = None
    first_in = last_out = None
    next_free = top + 1
    for k in range(m):
        mapping = {0: 0}
        if k == 0:
            mapping.update({n: n for n in nodes})
        else:
            for n in nodes:
                if n == p1.node:
                    mapping[n] = prev_out
                elif n == p2.node and p2.node != p1.node:
                    mapping[n] = next_free
                    next_free += 1
                else:
                    mapping[n] = next_free
                    next_free += 1
            if p2.node == p1.node:
                mapping[p2.node] = prev_out
        suffix = "" if k == 0 else f"_{k + 1}"
        for e in net.elements:
            if e.name in drop:
                continue
            els.append(e.renamed(e.name + suffix, mapping[e.node_a], mapping[e.node_b]))
        if k == 0:
            first_in = mapping[p1.node]
        prev_out = mapping[p2.node]
        last_out = prev_out
    for src in cw[:1]:
        els.append(src.renamed(src.name, first_in, 0))
    if pag is not None:
        els.append(pag.renamed(pag.name, last_out, 0))
    ports = (Port(first_in, 0, p1.z0), Port(last_out, 0, p2.z0))
    title = net.title if m == 1 else f"{net.title} x{m}".strip()
    return Netlist(elements=tuple(els), ports=ports, models=dict(net.models),
                   v_bias=net.v_bias, f_ref=net.f_ref, title=title)


@dataclass(frozen=True)
class ZbTuning:
    network: SynthesizedNetwork
    factor: float
    table: tuple  # (factor, p_th W, is_max dB) for every candidate


def tune_zb(sn: SynthesizedNetwork, factors=None, p_start: float = dbm_to_w(-10.0),
            p_stop: float = dbm_to_w(28.0), step_db: float = 1.0,
            pth_budget_db: float = 2.0) -> ZbTuning:
    """Rescale the Z_b tank (L_b and C_b, kept resonant at f_in_opt) for the largest IS.

    The Z_b tank is open at f_in_opt, so the passband and IL are untouched; the
    candidate with the highest IS below P_max whose threshold stays within
    ``pth_budget_db`` of the untuned one is returned.
    """
    if factors is None:
        factors = np.round(np.arange(0.90, 1.101, 0.01), 6)
    f_in = sn.design.f_in_opt
    base = None
    rows = []
    for fac in sorted(factors, key=lambda v: abs(v - 1.0)):
        cand = sn.scaled_zb(fac)
        tr = power_sweep(cand.netlist(), f_in, p_start, p_stop, step_db)
        try:
            p_th = extract_pth(tr)
            rep = is_report(tr, cand.varactor, p_th=p_th)
            rows.append((float(fac), p_th, rep.is_max_below_pmax))
        except (NoBifurcationError, TraceError):
            rows.append((float(fac), math.inf, math.nan))
        if base is None:
            base = rows[-1][1]
    if not math.isfinite(base):
        raise NoBifurcationError("the untuned network never divides; nothing to tune")
    ok = [r for r in rows if math.isfinite(r[1]) and math.isfinite(r[2])
          and abs(w_to_dbm(r[1]) - w_to_dbm(base)) <= pth_budget_db]
    best = max(ok, key=lambda r: (r[2], -abs(r[0] - 1.0)))
    return ZbTuning(sn.scaled_zb(best[0]), best[0], tuple(sorted(rows)))

"""CSV emitters for sweeps, S-parameter lists, frequency sweeps and grids.

All files are RFC-4180 with LF line endings, a header naming each column with
its unit, and numbers at 12 significant digits. Power columns are converted to
dBm here and nowhere else.
"""
from __future__ import annotations

import csv
import io
import math
from functools import singledispatch

import numpy as np

from .analytic import Grid
from .errors import TraceError
from .linear import SParameters, SParamSweep
from .sweep import FrequencySweep, IsReport, SweepTrace
from .units import mag_db, w_to_dbm

DIGITS = 12


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.{DIGITS}g}"


@singledispatch
def table(data) -> tuple[list, list]:
    """(header, rows) for any supported trace type."""
    if isinstance(data, (list, tuple)) and data and all(isinstance(d, SParameters) for d in data):
        return _sparams_table(data)
    if isinstance(data, (list, tuple)) and not data:
        raise TraceError("nothing to write: empty data")
    raise TypeError(f"cannot tabulate {type(data).__name__}")


@table.register
def _(trace: SweepTrace):
    header = ["p_in_dbm", "s21_db", "s11_db", "p_sub_dbm", "v_diode_peak_v", "divided"]
    rows = [[w_to_dbm(r.p_in), r.s21_db, r.s11_db, w_to_dbm(r.p_sub), r.diode_v_peak, r.divided]
            for r in trace.records]
    return header, rows


def _sparams_table(points):
    header = ["f_hz"]
    for name in ("s11", "s21", "s12", "s22"):
        header += [f"{name}_db", f"{name}_deg"]
    rows = []
    for sp in points:
        row = [sp.frequency]
        for v in (sp.s11, sp.s21, sp.s12, sp.s22):
            row += [mag_db(v), math.degrees(math.atan2(v.imag, v.real))]
        rows.append(row)
    return header, rows


@table.register
def _(sweep: SParamSweep):
    if len(sweep) == 0:
        raise TraceError("nothing to write: empty S-parameter sweep")
    return _sparams_table(list(sweep))


@table.register
def _(fs: FrequencySweep):
    header = ["f_hz", "s21_db", "s21_ss_db", "suppression_db", "divided"]
    rows = [[f, a, b, c, d] for f, a, b, c, d in
            zip(fs.frequencies, fs.s21_db, mag_db(fs.s21_ss), fs.suppression_db, fs.divided)]
    return header, rows


@table.register
def _(rep: IsReport):
    return ["p_in_dbm", "is_db"], [[p, v] for p, v in zip(rep.p_in_dbm, rep.is_db)]


@table.register
def _(grid: Grid):
    conv = grid.metric in ("p_th", "p_max")
    rows = [[x, y, w_to_dbm(v) if conv and v > 0 else v] for x, y, v in grid.rows()]
    return ["x", "y", "value"], rows


def to_csv_text(data) -> str:
    header, rows = table(data)
    if not rows:
        raise TraceError("nothing to write: no rows")
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_trace_csv(data, path) -> None:
    """Write ``data`` to ``path``; nothing is created when there is nothing to write."""
    text = to_csv_text(data)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_csv(path) -> tuple[list, np.ndarray]:
    """Header and float matrix of a file written by :func:`write_trace_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TraceError(f"{path}: empty file")
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)

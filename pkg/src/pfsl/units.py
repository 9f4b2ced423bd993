"""Logarithmic unit conversions.

Everything inside the solvers is SI. These helpers sit at the edges, where
traces are reported and command-line arguments are read.
"""
import math

import numpy as np


def w_to_dbm(p):
    """Watts to dBm. Zero maps to ``-inf``."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(p / 1e-3)
    return float(out) if out.ndim == 0 else out


def dbm_to_w(dbm):
    out = 1e-3 * np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def ratio_to_db(r):
    """Power ratio to dB."""
    return 10.0 * math.log10(r)


def db_to_ratio(db):
    return 10.0 ** (db / 10.0)


def mag_db(x):
    """``20*log10|x|`` for complex amplitudes (voltage-like quantities)."""
    a = np.abs(np.asarray(x))
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(a)
    return float(out) if out.ndim == 0 else out

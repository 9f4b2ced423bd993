"""Large-signal varactor law, vectorised over voltage samples.

Voltages here are element voltages ``v = V(node_a) - V(node_b)`` with node_a the
cathode, so the reverse voltage is ``v_dc + v``. Charges are referred to the bias
point, which keeps them O(pC) and lets the linear solvers start from zero.
"""
import numpy as np

THERMAL_VOLTAGE = 0.025852
# cap on the exponent of the conduction law, guards Newton iterates against overflow
EXP_LIMIT = 40.0


def _junction_charge(m, v_r):
    v_r = np.asarray(v_r, dtype=float)
    v0 = -m.fc * m.v_j
    x = np.maximum(v_r, v0)
    base = 1.0 + x / m.v_j
    if abs(m.gamma - 1.0) < 1e-12:
        q = m.c_j0 * m.v_j * np.log(base)
    else:
        q = m.c_j0 * m.v_j / (1.0 - m.gamma) * (base ** (1.0 - m.gamma) - 1.0)
    below = v_r < v0
    if np.any(below):
        c_fc = m.c_j0 / (1.0 - m.fc) ** m.gamma
        slope = m.gamma * c_fc / (m.v_j * (1.0 - m.fc))
        dv = v_r - v0
        q = np.where(below, q + c_fc * dv - 0.5 * slope * dv * dv, q)
    return q


def _junction_capacitance(m, v_r):
    v_r = np.asarray(v_r, dtype=float)
    v0 = -m.fc * m.v_j
    x = np.maximum(v_r, v0)
    c = m.c_j0 / (1.0 + x / m.v_j) ** m.gamma
    below = v_r < v0
    if np.any(below):
        c_fc = m.c_j0 / (1.0 - m.fc) ** m.gamma
        slope = m.gamma * c_fc / (m.v_j * (1.0 - m.fc))
        c = np.where(below, c_fc + slope * (v0 - v_r), c)
    return c


def charge(m, v_dc, v):
    """Stored charge relative to the bias point, C."""
    v_r = v_dc + np.asarray(v, dtype=float)
    q = m.c_pkg * (v_r - v_dc) + _junction_charge(m, v_r) - _junction_charge(m, v_dc)
    return q


def capacitance(m, v_dc, v):
    return m.c_pkg + _junction_capacitance(m, v_dc + np.asarray(v, dtype=float))


def conduction(m, v_dc, v):
    """Junction conduction current (cathode to anode positive) and its slope.

    Forward conduction flows anode to cathode, so it shows up negative here.
    The exponential is continued linearly past ``EXP_LIMIT``.
    """
    v_r = v_dc + np.asarray(v, dtype=float)
    nvt = m.n_ideality * THERMAL_VOLTAGE
    x = -v_r / nvt
    xc = np.minimum(x, EXP_LIMIT)
    ex = np.exp(xc)
    lin = np.where(x > EXP_LIMIT, x - EXP_LIMIT, 0.0)
    i_f = m.i_s * (ex * (1.0 + lin) - 1.0)
    g = m.i_s * ex / nvt
    return -i_f, g

"""Pure-Python trapezoidal stepping kernel (fallback for the compiled one).

Both kernels take the same arguments and must produce the same numbers; see
``transient.py`` for how the matrices are built.
"""
import math

import numpy as np

EXP_LIMIT = 40.0


def _junction(p, u, h):
    """phi = q(u) + h*i(u) and its derivative for one junction.

    ``p`` = (c_j0, v_j, gamma, fc, c_pkg, i_s, nvt, v_dc, q_dc, c_lin); c_lin is
    not used here, the caller subtracts it.
    """
    cj0, vj, gam, fc, cpkg, i_s, nvt, vdc, qdc = p[:9]
    vr = vdc + u
    v0 = -fc * vj
    if vr >= v0:
        base = 1.0 + vr / vj
        if abs(gam - 1.0) < 1e-12:
            q = cj0 * vj * math.log(base)
        else:
            q = cj0 * vj / (1.0 - gam) * (base ** (1.0 - gam) - 1.0)
        c = cj0 / base ** gam
    else:
        base = 1.0 - fc
        if abs(gam - 1.0) < 1e-12:
            q = cj0 * vj * math.log(base)
        else:
            q = cj0 * vj / (1.0 - gam) * (base ** (1.0 - gam) - 1.0)
        c_fc = cj0 / base ** gam
        slope = gam * c_fc / (vj * (1.0 - fc))
        d = vr - v0
        q += c_fc * d - 0.5 * slope * d * d
        c = c_fc - slope * d
    q += cpkg * u - qdc
    c += cpkg
    x = -vr / nvt
    if x > EXP_LIMIT:
        ex = math.exp(EXP_LIMIT)
        i_f = i_s * (ex * (1.0 + x - EXP_LIMIT) - 1.0)
    else:
        ex = math.exp(x)
        i_f = i_s * (ex - 1.0)
    g = i_s * ex / nvt
    return q, -i_f, c + h * g, g


def integrate(minv, cm, gm, al, a, b, j_ia, j_ib, jpar, s_ia, s_ib, s_amp, s_w, s_ph,
              dt, n_steps, tol, max_newton, max_dv, t_ramp=0.0):
    """Run ``n_steps`` trapezoidal steps from the zero state.

    The junction stamp ``c_lin`` (last column of ``jpar``) is already part of
    ``minv``; only the remainder ``phi(u) - c_lin*u`` is solved for.

    Sources are faded in with a raised cosine over ``t_ramp``. Starting them at
    full strength leaves nodes without capacitance inconsistent at t = 0, and
    the trapezoidal rule keeps that error alive as a (-1)**n oscillation.

    Returns (V, I, fail) with V[k] the node voltages after step k+1, I the
    inductor currents and fail the index of the first step whose Newton
    iteration did not converge (-1 if none).
    """
    n = cm.shape[0]
    nl = al.shape[1]
    nj = len(j_ia)
    h = 0.5 * dt
    V = np.empty((n_steps, n))
    I = np.empty((n_steps, nl))
    v = np.zeros(n)
    il = np.zeros(nl)
    u = np.zeros(nj)
    P = np.zeros((nj, n))
    for k in range(nj):
        if j_ia[k] >= 0:
            P[k, j_ia[k]] += 1.0
        if j_ib[k] >= 0:
            P[k, j_ib[k]] -= 1.0
    W = minv @ P.T
    Z = P @ W
    S = np.zeros((n, len(s_ia)))
    for k in range(len(s_ia)):
        if s_ia[k] >= 0:
            S[s_ia[k], k] += s_amp[k]
        if s_ib[k] >= 0:
            S[s_ib[k], k] -= s_amp[k]
    c_lin = np.array([p[9] for p in jpar]) if nj else np.zeros(0)
    q = np.zeros(nj)
    ic = np.zeros(nj)
    jn = S @ np.cos(s_ph) * (1.0 if t_ramp <= 0.0 else 0.0)
    fail = -1
    for step in range(n_steps):
        t1 = (step + 1) * dt
        env = 0.5 * (1.0 - math.cos(math.pi * t1 / t_ramp)) if t1 < t_ramp else 1.0
        j1 = env * (S @ np.cos(s_w * t1 + s_ph))
        alt = al.T @ v
        rhs = cm @ v + P.T @ q + h * (jn - gm @ v - al @ il - P.T @ ic) \
            - h * (al @ (a * il) + al @ (b * alt) - j1)
        w0 = minv @ rhs
        u0 = P @ w0
        un = u.copy()
        ok = nj == 0
        for _ in range(max_newton):
            phi = np.empty(nj)
            dphi = np.empty(nj)
            for m in range(nj):
                qm, im, dm, _ = _junction(jpar[m], un[m], h)
                phi[m] = qm + h * im - c_lin[m] * un[m]
                dphi[m] = dm - c_lin[m]
            r = un + Z @ phi - u0
            jac = np.eye(nj) + Z * dphi
            du = np.linalg.solve(jac, -r)
            big = np.max(np.abs(du))
            if big > max_dv:
                du *= max_dv / big
            un += du
            if np.all(np.abs(du) <= tol * np.maximum(np.abs(un), 1.0)):
                ok = True
                break
        if not ok:
            fail = step
            V = V[:step]
            I = I[:step]
            break
        for m in range(nj):
            q[m], ic[m], _, _ = _junction(jpar[m], un[m], h)
        vn = w0 - W @ (q + h * ic - c_lin * un)
        il = a * il + b * (al.T @ (vn + v))
        v = vn
        u = un
        jn = j1
        V[step] = v
        I[step] = il
    return V, I, fail

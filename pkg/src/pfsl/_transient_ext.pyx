# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trapezoidal stepping kernel; same contract as ``_transient_py.integrate``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, exp, log, pow, fabs, M_PI

cnp.import_array()

cdef double EXP_LIMIT = 40.0


cdef inline void _junction(double[:] p, double u, double h,
                           double* q, double* ic, double* dphi) noexcept nogil:
    cdef double cj0 = p[0], vj = p[1], gam = p[2], fc = p[3], cpkg = p[4]
    cdef double i_s = p[5], nvt = p[6], vdc = p[7], qdc = p[8]
    cdef double vr = vdc + u, v0 = -fc * vj
    cdef double base, qq, c, c_fc, slope, d, x, ex, i_f
    if vr >= v0:
        base = 1.0 + vr / vj
        if fabs(gam - 1.0) < 1e-12:
            qq = cj0 * vj * log(base)
        else:
            qq = cj0 * vj / (1.0 - gam) * (pow(base, 1.0 - gam) - 1.0)
        c = cj0 / pow(base, gam)
    else:
        base = 1.0 - fc
        if fabs(gam - 1.0) < 1e-12:
            qq = cj0 * vj * log(base)
        else:
            qq = cj0 * vj / (1.0 - gam) * (pow(base, 1.0 - gam) - 1.0)
        c_fc = cj0 / pow(base, gam)
        slope = gam * c_fc / (vj * (1.0 - fc))
        d = vr - v0
        qq = qq + c_fc * d - 0.5 * slope * d * d
        c = c_fc - slope * d
    qq = qq + cpkg * u - qdc
    c = c + cpkg
    x = -vr / nvt
    if x > EXP_LIMIT:
        ex = exp(EXP_LIMIT)
        i_f = i_s * (ex * (1.0 + x - EXP_LIMIT) - 1.0)
    else:
        ex = exp(x)
        i_f = i_s * (ex - 1.0)
    q[0] = qq
    ic[0] = -i_f
    dphi[0] = c + h * i_s * ex / nvt


cdef int _solve_small(double[:, :] a, double[:] r, int n) noexcept nogil:
    """Gaussian elimination with partial pivoting, in place; solution in r."""
    cdef int i, j, k, piv
    cdef double big, t
    for k in range(n):
        piv = k
        big = fabs(a[k, k])
        for i in range(k + 1, n):
            if fabs(a[i, k]) > big:
                big = fabs(a[i, k])
                piv = i
        if big == 0.0:
            return -1
        if piv != k:
            for j in range(n):
                t = a[k, j]
                a[k, j] = a[piv, j]
                a[piv, j] = t
            t = r[k]
            r[k] = r[piv]
            r[piv] = t
        for i in range(k + 1, n):
            t = a[i, k] / a[k, k]
            for j in range(k, n):
                a[i, j] -= t * a[k, j]
            r[i] -= t * r[k]
    for k in range(n - 1, -1, -1):
        t = r[k]
        for j in range(k + 1, n):
            t -= a[k, j] * r[j]
        r[k] = t / a[k, k]
    return 0


def integrate(minv_, cm_, gm_, al_, a_, b_, j_ia_, j_ib_, jpar_, s_ia_, s_ib_, s_amp_,
              s_w_, s_ph_, double dt, long n_steps, double tol, int max_newton, double max_dv,
              double t_ramp=0.0):
    cdef double[:, :] minv = np.ascontiguousarray(minv_, dtype=np.float64)
    cdef double[:, :] cm = np.ascontiguousarray(cm_, dtype=np.float64)
    cdef double[:, :] gm = np.ascontiguousarray(gm_, dtype=np.float64)
    cdef double[:, :] al = np.ascontiguousarray(al_, dtype=np.float64).reshape(cm.shape[0], -1)
    cdef double[:] a = np.ascontiguousarray(a_, dtype=np.float64)
    cdef double[:] b = np.ascontiguousarray(b_, dtype=np.float64)
    cdef long[:] j_ia = np.ascontiguousarray(j_ia_, dtype=np.int64)
    cdef long[:] j_ib = np.ascontiguousarray(j_ib_, dtype=np.int64)
    cdef double[:, :] jpar = np.ascontiguousarray(jpar_, dtype=np.float64).reshape(len(j_ia_), 10)
    cdef long[:] s_ia = np.ascontiguousarray(s_ia_, dtype=np.int64)
    cdef long[:] s_ib = np.ascontiguousarray(s_ib_, dtype=np.int64)
    cdef double[:] s_amp = np.ascontiguousarray(s_amp_, dtype=np.float64)
    cdef double[:] s_w = np.ascontiguousarray(s_w_, dtype=np.float64)
    cdef double[:] s_ph = np.ascontiguousarray(s_ph_, dtype=np.float64)

    cdef Py_ssize_t n = cm.shape[0], nl = al.shape[1], nj = j_ia.shape[0], ns = s_ia.shape[0]
    cdef double h = 0.5 * dt
    out_v = np.empty((n_steps, n))
    out_i = np.empty((n_steps, nl))
    cdef double[:, :] V = out_v
    cdef double[:, :] I = out_i

    cdef double[:] v = np.zeros(n)
    cdef double[:] vn = np.zeros(n)
    cdef double[:] il = np.zeros(nl)
    cdef double[:] u = np.zeros(nj)
    cdef double[:] un = np.zeros(nj)
    cdef double[:] q = np.zeros(nj)
    cdef double[:] ic = np.zeros(nj)
    cdef double[:] phi = np.zeros(nj)
    cdef double[:] dphi = np.zeros(nj)
    cdef double[:] res = np.zeros(nj)
    cdef double[:] u0 = np.zeros(nj)
    cdef double[:, :] jac = np.zeros((nj, nj))
    cdef double[:] jn = np.zeros(n)
    cdef double[:] j1 = np.zeros(n)
    cdef double[:] rhs = np.zeros(n)
    cdef double[:] w0 = np.zeros(n)
    cdef double[:] alt = np.zeros(nl)
    cdef double[:, :] W = np.zeros((n, nj))
    cdef double[:, :] Z = np.zeros((nj, nj))

    cdef Py_ssize_t i, j, k, m, step, it
    cdef double t1, s, qm, im, dm, big, scale, c_lin
    cdef int ok
    cdef long fail = -1

    # W = minv P^T, Z = P W
    for i in range(n):
        for m in range(nj):
            s = 0.0
            if j_ia[m] >= 0:
                s += minv[i, j_ia[m]]
            if j_ib[m] >= 0:
                s -= minv[i, j_ib[m]]
            W[i, m] = s
    for k in range(nj):
        for m in range(nj):
            s = 0.0
            if j_ia[k] >= 0:
                s += W[j_ia[k], m]
            if j_ib[k] >= 0:
                s -= W[j_ib[k], m]
            Z[k, m] = s

    cdef double env = 1.0 if t_ramp <= 0.0 else 0.0
    for k in range(ns):
        if s_ia[k] >= 0:
            jn[s_ia[k]] += env * s_amp[k] * cos(s_ph[k])
        if s_ib[k] >= 0:
            jn[s_ib[k]] -= env * s_amp[k] * cos(s_ph[k])

    with nogil:
        for step in range(n_steps):
            t1 = (step + 1) * dt
            env = 1.0
            if t1 < t_ramp:
                env = 0.5 * (1.0 - cos(M_PI * t1 / t_ramp))
            for i in range(n):
                j1[i] = 0.0
            for k in range(ns):
                s = env * s_amp[k] * cos(s_w[k] * t1 + s_ph[k])
                if s_ia[k] >= 0:
                    j1[s_ia[k]] += s
                if s_ib[k] >= 0:
                    j1[s_ib[k]] -= s
            for k in range(nl):
                s = 0.0
                for i in range(n):
                    s += al[i, k] * v[i]
                alt[k] = s
            for i in range(n):
                s = h * (jn[i] + j1[i])
                for j in range(n):
                    s += (cm[i, j] - h * gm[i, j]) * v[j]
                for k in range(nl):
                    s -= h * al[i, k] * ((1.0 + a[k]) * il[k] + b[k] * alt[k])
                rhs[i] = s
            for m in range(nj):
                if j_ia[m] >= 0:
                    rhs[j_ia[m]] += q[m] - h * ic[m]
                if j_ib[m] >= 0:
                    rhs[j_ib[m]] -= q[m] - h * ic[m]
            for i in range(n):
                s = 0.0
                for j in range(n):
                    s += minv[i, j] * rhs[j]
                w0[i] = s
            for m in range(nj):
                s = 0.0
                if j_ia[m] >= 0:
                    s += w0[j_ia[m]]
                if j_ib[m] >= 0:
                    s -= w0[j_ib[m]]
                u0[m] = s
                un[m] = u[m]

            ok = 1 if nj == 0 else 0
            for it in range(max_newton):
                for m in range(nj):
                    _junction(jpar[m], un[m], h, &qm, &im, &dm)
                    c_lin = jpar[m, 9]
                    phi[m] = qm + h * im - c_lin * un[m]
                    dphi[m] = dm - c_lin
                for k in range(nj):
                    s = un[k] - u0[k]
                    for m in range(nj):
                        s += Z[k, m] * phi[m]
                        jac[k, m] = Z[k, m] * dphi[m]
                    jac[k, k] += 1.0
                    res[k] = -s
                if _solve_small(jac, res, nj) != 0:
                    break
                big = 0.0
                for m in range(nj):
                    if fabs(res[m]) > big:
                        big = fabs(res[m])
                scale = 1.0
                if big > max_dv:
                    scale = max_dv / big
                ok = 1
                for m in range(nj):
                    un[m] += scale * res[m]
                    if fabs(scale * res[m]) > tol * (fabs(un[m]) if fabs(un[m]) > 1.0 else 1.0):
                        ok = 0
                if ok:
                    break
            if not ok:
                fail = step
                break

            for m in range(nj):
                _junction(jpar[m], un[m], h, &qm, &im, &dm)
                q[m] = qm
                ic[m] = im
                phi[m] = qm + h * im - jpar[m, 9] * un[m]
            for i in range(n):
                s = w0[i]
                for m in range(nj):
                    s -= W[i, m] * phi[m]
                vn[i] = s
            for k in range(nl):
                s = 0.0
                for i in range(n):
                    s += al[i, k] * (vn[i] + v[i])
                il[k] = a[k] * il[k] + b[k] * s
            for i in range(n):
                v[i] = vn[i]
                jn[i] = j1[i]
                V[step, i] = v[i]
            for m in range(nj):
                u[m] = un[m]
            for k in range(nl):
                I[step, k] = il[k]

    if fail >= 0:
        return out_v[:fail], out_i[:fail], fail
    return out_v, out_i, fail

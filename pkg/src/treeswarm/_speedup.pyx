# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel (hot path).

Same contract as _reference.integrate_swarm; see that module's docstring.
"""

import numpy as np

from libc.math cimport cos, sin, sqrt


cdef int _rhs(
    double[:, ::1] pos, double[:, ::1] vel, double fx, double fy,
    long[::1] kind, double[:, ::1] mpar,
    double[::1] lam2, double[::1] cor_c,
    double[::1] eta, double[::1] gam, double[::1] zet,
    double[::1] big_b, double[::1] big_d,
    double rho, double sigma, double gamma_term,
    double big_p, double big_q, double r2,
    long[::1] tails, long[::1] heads,
    double[::1] frozen, bint use_frozen,
    double[:, ::1] theta, double[::1] lsum, double[::1] kv,
    double[:, ::1] u, double[:, ::1] acc, double[::1] d2buf,
) noexcept nogil:
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t e = tails.shape[0]
    cdef Py_ssize_t i, k
    cdef long t, h
    cdef double dx0, dx1, d2, den, den4, den6, w, l2s, pq, pq2
    cdef double s0, s1, tot0, tot1
    cdef double a1, a2, a3, c2, s2, m11, m12, q1d, q2d, cv0, cv1, r0, r1, det

    pq = big_p * (r2 + big_q)
    pq2 = pq * pq
    for i in range(n):
        theta[i, 0] = 0.0
        theta[i, 1] = 0.0
        lsum[i] = 0.0

    for k in range(e):
        t = tails[k]
        h = heads[k]
        dx0 = pos[h, 0] - pos[t, 0]
        dx1 = pos[h, 1] - pos[t, 1]
        d2 = dx0 * dx0 + dx1 * dx1
        d2buf[k] = d2
        if d2 >= r2:
            return 1
        den = r2 - d2 + big_q
        w = 2.0 * pq / (den * den)
        theta[t, 0] -= w * dx0
        theta[t, 1] -= w * dx1
        theta[h, 0] += w * dx0
        theta[h, 1] += w * dx1
        if not use_frozen:
            den4 = den * den * den * den
            den6 = den4 * den * den
            l2s = lam2[t] * lam2[t]
            lsum[t] += (16.0 * l2s * pq2 * d2 * d2 / (eta[t] * den6)
                        + l2s * pq2 / (gam[t] * den4)
                        + cor_c[t] * cor_c[t] * pq2 * d2 / (2.0 * zet[t] * den4))
            l2s = lam2[h] * lam2[h]
            lsum[h] += (16.0 * l2s * pq2 * d2 * d2 / (eta[h] * den6)
                        + l2s * pq2 / (gam[h] * den4)
                        + cor_c[h] * cor_c[h] * pq2 * d2 / (2.0 * zet[h] * den4))

    for i in range(n):
        if use_frozen:
            kv[i] = frozen[i]
        else:
            kv[i] = 0.5 * rho * lam2[i] + sigma * lsum[i]
            if i == 0:
                kv[i] += gamma_term
        s0 = vel[i, 0] + sigma * theta[i, 0]
        s1 = vel[i, 1] + sigma * theta[i, 1]
        u[i, 0] = -kv[i] * s0 - big_d[i] * vel[i, 0] - big_b[i] * theta[i, 0]
        u[i, 1] = -kv[i] * s1 - big_d[i] * vel[i, 1] - big_b[i] * theta[i, 1]
        tot0 = u[i, 0]
        tot1 = u[i, 1]
        if i == 0:
            tot0 += fx
            tot1 += fy
        if kind[i] == 0:
            acc[i, 0] = tot0 / mpar[i, 0]
            acc[i, 1] = tot1 / mpar[i, 0]
        else:
            a1 = mpar[i, 0]
            a2 = mpar[i, 1]
            a3 = mpar[i, 2]
            c2 = cos(pos[i, 1])
            s2 = sin(pos[i, 1])
            m11 = a1 + 2.0 * a3 * c2
            m12 = a2 + a3 * c2
            q1d = vel[i, 0]
            q2d = vel[i, 1]
            cv0 = -a3 * s2 * (2.0 * q1d * q2d + q2d * q2d)
            cv1 = a3 * s2 * q1d * q1d
            r0 = tot0 - cv0
            r1 = tot1 - cv1
            det = m11 * a2 - m12 * m12
            acc[i, 0] = (a2 * r0 - m12 * r1) / det
            acc[i, 1] = (m11 * r1 - m12 * r0) / det
    return 0


def integrate_swarm(
    pos0,
    vel0,
    kind,
    mpar,
    lam2,
    cor_c,
    eta,
    gam,
    zet,
    big_b,
    big_d,
    double rho,
    double sigma,
    double gamma_term,
    double big_p,
    double big_q,
    double r2,
    tails,
    heads,
    f_half,
    double dt,
    int steps,
    freeze_k,
    pos_out,
    vel_out,
    u_out,
    k_out,
    edge_out,
    vp_out,
    v_out,
):
    cdef double[:, ::1] pos = np.ascontiguousarray(pos0, dtype=np.float64).copy()
    cdef double[:, ::1] vel = np.ascontiguousarray(vel0, dtype=np.float64).copy()
    cdef long[::1] kind_v = np.ascontiguousarray(kind, dtype=np.int64)
    cdef double[:, ::1] mpar_v = np.ascontiguousarray(mpar, dtype=np.float64)
    cdef double[::1] lam2_v = np.ascontiguousarray(lam2, dtype=np.float64)
    cdef double[::1] cc_v = np.ascontiguousarray(cor_c, dtype=np.float64)
    cdef double[::1] eta_v = np.ascontiguousarray(eta, dtype=np.float64)
    cdef double[::1] gam_v = np.ascontiguousarray(gam, dtype=np.float64)
    cdef double[::1] zet_v = np.ascontiguousarray(zet, dtype=np.float64)
    cdef double[::1] b_v = np.ascontiguousarray(big_b, dtype=np.float64)
    cdef double[::1] d_v = np.ascontiguousarray(big_d, dtype=np.float64)
    cdef long[::1] tails_v = np.ascontiguousarray(tails, dtype=np.int64)
    cdef long[::1] heads_v = np.ascontiguousarray(heads, dtype=np.int64)
    cdef double[:, ::1] f_v = np.ascontiguousarray(f_half, dtype=np.float64)
    cdef double[:, :, ::1] pos_o = pos_out
    cdef double[:, :, ::1] vel_o = vel_out
    cdef double[:, :, ::1] u_o = u_out
    cdef double[:, ::1] k_o = k_out
    cdef double[:, ::1] edge_o = edge_out
    cdef double[::1] vp_o = vp_out
    cdef double[::1] v_o = v_out

    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t e = tails_v.shape[0]
    cdef double[:, ::1] theta = np.empty((n, 2))
    cdef double[::1] lsum = np.empty(n)
    cdef double[::1] kv = np.empty(n)
    cdef double[:, ::1] u = np.empty((n, 2))
    cdef double[::1] d2buf = np.empty(e)
    cdef double[:, ::1] a1 = np.empty((n, 2))
    cdef double[:, ::1] a2 = np.empty((n, 2))
    cdef double[:, ::1] a3 = np.empty((n, 2))
    cdef double[:, ::1] a4 = np.empty((n, 2))
    cdef double[:, ::1] ps = np.empty((n, 2))
    cdef double[:, ::1] vs = np.empty((n, 2))
    cdef double[:, ::1] v2 = np.empty((n, 2))
    cdef double[:, ::1] v3 = np.empty((n, 2))
    cdef double[:, ::1] v4 = np.empty((n, 2))
    cdef double[::1] frozen = np.zeros(n)
    cdef bint use_frozen = bool(freeze_k)

    cdef Py_ssize_t i, j
    cdef int step_i, fail
    cdef double vp, kin, den, s0, s1, c2, m11, m12, dt6 = dt / 6.0

    if use_frozen:
        fail = _rhs(pos, vel, f_v[0, 0], f_v[0, 1], kind_v, mpar_v, lam2_v, cc_v,
                    eta_v, gam_v, zet_v, b_v, d_v, rho, sigma, gamma_term,
                    big_p, big_q, r2, tails_v, heads_v, frozen, 0,
                    theta, lsum, kv, u, a1, d2buf)
        if fail:
            return -1
        for i in range(n):
            frozen[i] = kv[i]

    step_i = 0
    while True:
        fail = _rhs(pos, vel, f_v[2 * step_i, 0], f_v[2 * step_i, 1], kind_v, mpar_v,
                    lam2_v, cc_v, eta_v, gam_v, zet_v, b_v, d_v, rho, sigma,
                    gamma_term, big_p, big_q, r2, tails_v, heads_v, frozen,
                    use_frozen, theta, lsum, kv, u, a1, d2buf)
        if fail:
            return step_i - 1

        vp = 0.0
        for j in range(e):
            edge_o[step_i, j] = sqrt(d2buf[j])
            vp += big_p * d2buf[j] / (r2 - d2buf[j] + big_q)
        vp_o[step_i] = vp
        v_o[step_i] = vp
        for i in range(n):
            pos_o[step_i, i, 0] = pos[i, 0]
            pos_o[step_i, i, 1] = pos[i, 1]
            vel_o[step_i, i, 0] = vel[i, 0]
            vel_o[step_i, i, 1] = vel[i, 1]
            u_o[step_i, i, 0] = u[i, 0]
            u_o[step_i, i, 1] = u[i, 1]
            k_o[step_i, i] = kv[i]
            s0 = vel[i, 0] + sigma * theta[i, 0]
            s1 = vel[i, 1] + sigma * theta[i, 1]
            if kind_v[i] == 0:
                kin = mpar_v[i, 0] * (s0 * s0 + s1 * s1)
            else:
                c2 = cos(pos[i, 1])
                m11 = mpar_v[i, 0] + 2.0 * mpar_v[i, 2] * c2
                m12 = mpar_v[i, 1] + mpar_v[i, 2] * c2
                kin = m11 * s0 * s0 + 2.0 * m12 * s0 * s1 + mpar_v[i, 1] * s1 * s1
            den = b_v[i] + sigma * d_v[i]
            v_o[step_i] += 0.5 * kin / den

        if step_i == steps:
            return steps

        # stage 2 at the midpoint
        for i in range(n):
            ps[i, 0] = pos[i, 0] + 0.5 * dt * vel[i, 0]
            ps[i, 1] = pos[i, 1] + 0.5 * dt * vel[i, 1]
            v2[i, 0] = vel[i, 0] + 0.5 * dt * a1[i, 0]
            v2[i, 1] = vel[i, 1] + 0.5 * dt * a1[i, 1]
        fail = _rhs(ps, v2, f_v[2 * step_i + 1, 0], f_v[2 * step_i + 1, 1], kind_v,
                    mpar_v, lam2_v, cc_v, eta_v, gam_v, zet_v, b_v, d_v, rho, sigma,
                    gamma_term, big_p, big_q, r2, tails_v, heads_v, frozen,
                    use_frozen, theta, lsum, kv, u, a2, d2buf)
        if fail:
            return step_i

        # stage 3 at the midpoint
        for i in range(n):
            ps[i, 0] = pos[i, 0] + 0.5 * dt * v2[i, 0]
            ps[i, 1] = pos[i, 1] + 0.5 * dt * v2[i, 1]
            v3[i, 0] = vel[i, 0] + 0.5 * dt * a2[i, 0]
            v3[i, 1] = vel[i, 1] + 0.5 * dt * a2[i, 1]
        fail = _rhs(ps, v3, f_v[2 * step_i + 1, 0], f_v[2 * step_i + 1, 1], kind_v,
                    mpar_v, lam2_v, cc_v, eta_v, gam_v, zet_v, b_v, d_v, rho, sigma,
                    gamma_term, big_p, big_q, r2, tails_v, heads_v, frozen,
                    use_frozen, theta, lsum, kv, u, a3, d2buf)
        if fail:
            return step_i

        # stage 4 at the full step
        for i in range(n):
            ps[i, 0] = pos[i, 0] + dt * v3[i, 0]
            ps[i, 1] = pos[i, 1] + dt * v3[i, 1]
            v4[i, 0] = vel[i, 0] + dt * a3[i, 0]
            v4[i, 1] = vel[i, 1] + dt * a3[i, 1]
        fail = _rhs(ps, v4, f_v[2 * step_i + 2, 0], f_v[2 * step_i + 2, 1], kind_v,
                    mpar_v, lam2_v, cc_v, eta_v, gam_v, zet_v, b_v, d_v, rho, sigma,
                    gamma_term, big_p, big_q, r2, tails_v, heads_v, frozen,
                    use_frozen, theta, lsum, kv, u, a4, d2buf)
        if fail:
            return step_i

        for i in range(n):
            pos[i, 0] += dt6 * (vel[i, 0] + 2.0 * v2[i, 0] + 2.0 * v3[i, 0] + v4[i, 0])
            pos[i, 1] += dt6 * (vel[i, 1] + 2.0 * v2[i, 1] + 2.0 * v3[i, 1] + v4[i, 1])
            vel[i, 0] += dt6 * (a1[i, 0] + 2.0 * a2[i, 0] + 2.0 * a3[i, 0] + a4[i, 0])
            vel[i, 1] += dt6 * (a1[i, 1] + 2.0 * a2[i, 1] + 2.0 * a3[i, 1] + a4[i, 1])
        step_i += 1

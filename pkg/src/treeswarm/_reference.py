"""Pure-NumPy integration kernel: the fallback backend.

integrate_swarm advances the closed-loop swarm with classical fixed-step
RK4, re-evaluating the state-dependent control at every stage, and records
per-sample diagnostics. The compiled kernel in _speedup.pyx implements the
same contract; backend.py picks one at import time.

Contract
--------
Inputs: initial (N,2) positions/velocities; per-robot model arrays (kind,
reduced inertia parameters, bound constants, splitters, gains); design and
potential scalars; oriented edge index arrays; the user force sampled on the
half-step grid (2*steps+1 rows, applied to robot index 0); dt, step count
and the freeze flag (negative-control hook: gains held at their t=0 value).
Outputs are written into caller-allocated arrays with steps+1 rows.

Returns the number of completed steps: == steps on success, k < steps when
a link reached the communication radius during step k -> k+1 (rows 0..k are
valid), -1 when the initial state is already out of domain.
"""

import numpy as np


def _accelerations(pos, vel, tot, pm, tl, mpar):
    acc = np.empty_like(pos)
    if pm.any():
        acc[pm] = tot[pm] / mpar[pm, 0:1]
    if tl.any():
        a1, a2, a3 = mpar[tl, 0], mpar[tl, 1], mpar[tl, 2]
        c2 = np.cos(pos[tl, 1])
        s2 = np.sin(pos[tl, 1])
        q1d, q2d = vel[tl, 0], vel[tl, 1]
        m11 = a1 + 2.0 * a3 * c2
        m12 = a2 + a3 * c2
        cv0 = -a3 * s2 * (2.0 * q1d * q2d + q2d * q2d)
        cv1 = a3 * s2 * q1d * q1d
        r0 = tot[tl, 0] - cv0
        r1 = tot[tl, 1] - cv1
        det = m11 * a2 - m12 * m12
        acc[tl, 0] = (a2 * r0 - m12 * r1) / det
        acc[tl, 1] = (m11 * r1 - m12 * r0) / det
    return acc


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
    rho,
    sigma,
    gamma_term,
    big_p,
    big_q,
    r2,
    tails,
    heads,
    f_half,
    dt,
    steps,
    freeze_k,
    pos_out,
    vel_out,
    u_out,
    k_out,
    edge_out,
    vp_out,
    v_out,
):
    n = pos0.shape[0]
    pm = kind == 0
    tl = kind == 1
    pq = big_p * (r2 + big_q)
    pq2 = pq * pq
    lam2_sq = lam2 * lam2
    cc_sq = cor_c * cor_c
    denom = big_b + sigma * big_d
    floor_k = 0.5 * rho * lam2

    def forces(pos, vel, f, frozen):
        """One control evaluation; None when an edge left the domain."""
        dx = pos[heads] - pos[tails]
        d2 = np.einsum("ij,ij->i", dx, dx)
        if np.any(d2 >= r2):
            return None
        den = r2 - d2 + big_q
        w = 2.0 * pq / (den * den)
        theta = np.zeros_like(pos)
        np.add.at(theta, tails, -w[:, None] * dx)
        np.add.at(theta, heads, w[:, None] * dx)

        if frozen is None:
            den4 = den**4
            den6 = den4 * den * den
            lam_t = (
                16.0 * lam2_sq[tails] * pq2 * d2 * d2 / (eta[tails] * den6)
                + lam2_sq[tails] * pq2 / (gam[tails] * den4)
                + cc_sq[tails] * pq2 * d2 / (2.0 * zet[tails] * den4)
            )
            lam_h = (
                16.0 * lam2_sq[heads] * pq2 * d2 * d2 / (eta[heads] * den6)
                + lam2_sq[heads] * pq2 / (gam[heads] * den4)
                + cc_sq[heads] * pq2 * d2 / (2.0 * zet[heads] * den4)
            )
            lsum = np.zeros(n)
            np.add.at(lsum, tails, lam_t)
            np.add.at(lsum, heads, lam_h)
            kv = floor_k + sigma * lsum
            kv[0] += gamma_term
        else:
            kv = frozen

        s = vel + sigma * theta
        u = -kv[:, None] * s - big_d[:, None] * vel - big_b[:, None] * theta
        tot = u.copy()
        tot[0] += f
        return u, kv, s, theta, tot, d2

    frozen = None
    if freeze_k:
        first = forces(pos0, vel0, f_half[0], None)
        if first is None:
            return -1
        frozen = first[1]

    pos = np.array(pos0, dtype=float)
    vel = np.array(vel0, dtype=float)
    i = 0
    while True:
        st = forces(pos, vel, f_half[2 * i], frozen)
        if st is None:
            return i - 1
        u, kv, s, _theta, tot, d2 = st

        pos_out[i] = pos
        vel_out[i] = vel
        u_out[i] = u
        k_out[i] = kv
        edge_out[i] = np.sqrt(d2)
        vp = float(np.sum(big_p * d2 / (r2 - d2 + big_q)))
        kin = np.empty(n)
        if pm.any():
            kin[pm] = mpar[pm, 0] * np.einsum("ij,ij->i", s[pm], s[pm])
        if tl.any():
            c2 = np.cos(pos[tl, 1])
            m11 = mpar[tl, 0] + 2.0 * mpar[tl, 2] * c2
            m12 = mpar[tl, 1] + mpar[tl, 2] * c2
            s0, s1 = s[tl, 0], s[tl, 1]
            kin[tl] = m11 * s0 * s0 + 2.0 * m12 * s0 * s1 + mpar[tl, 1] * s1 * s1
        vp_out[i] = vp
        v_out[i] = vp + 0.5 * float(np.sum(kin / denom))

        if i == steps:
            return steps

        a1 = _accelerations(pos, vel, tot, pm, tl, mpar)
        p2 = pos + 0.5 * dt * vel
        v2 = vel + 0.5 * dt * a1
        st2 = forces(p2, v2, f_half[2 * i + 1], frozen)
        if st2 is None:
            return i
        a2 = _accelerations(p2, v2, st2[4], pm, tl, mpar)
        p3 = pos + 0.5 * dt * v2
        v3 = vel + 0.5 * dt * a2
        st3 = forces(p3, v3, f_half[2 * i + 1], frozen)
        if st3 is None:
            return i
        a3 = _accelerations(p3, v3, st3[4], pm, tl, mpar)
        p4 = pos + dt * v3
        v4 = vel + dt * a3
        st4 = forces(p4, v4, f_half[2 * i + 2], frozen)
        if st4 is None:
            return i
        a4 = _accelerations(p4, v4, st4[4], pm, tl, mpar)

        pos = pos + (dt / 6.0) * (vel + 2.0 * v2 + 2.0 * v3 + v4)
        vel = vel + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        i += 1

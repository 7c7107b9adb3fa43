"""Numerical certification of every provable claim on a simulation trace.

All checks are pure post-hoc analysis: quantities are recomputed from the
raw state samples (independently of the simulator's own logging, which is
itself cross-checked), compared against the closed-form envelopes, and
reported with worst-case margins. Tolerances follow abs + rel scaling with
abs 1e-9 and rel 1e-6 unless a check states otherwise; RK4 discretization
error is the dominant noise source.
"""

import numpy as np

from .controller import theta_all
from .dynamics import POINT_MASS
from .errors import PrerequisiteFailed, WrongProfile
from .graph import algebraic_connectivity, spectral_constants
from .potential import check_energy_invariance, selection_margins, total_potential
from .reporting import CertificateReport, CheckResult

ABS_TOL = 1e-9
REL_TOL = 1e-6


def chi(f_norm, rho, Gamma):
    """User-energy comparison function ||f||^2 / (4 rho Gamma)."""
    return np.asarray(f_norm, dtype=float) ** 2 / (4.0 * rho * Gamma)


def lyapunov_V(positions, velocities, tree, design, params, models):
    """Candidate energy: surface kinetic terms over coupling denominators
    plus the link potential."""
    from .dynamics import mass_matrix

    x = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    th = theta_all(x, tree, params)
    s = v + design.sigma * th
    denom = design.coupling_denominators()
    kin = 0.0
    for i, model in enumerate(models):
        m = mass_matrix(model, x[i])
        kin += float(s[i] @ m @ s[i]) / denom[i]
    return 0.5 * kin + total_potential(x, tree, params)


def recompute_trace(trace):
    """Re-derive per-sample quantities from raw positions/velocities.

    Returns arrays keyed theta, s, K, u, vp, v, edge_dist, theta_sq_sum.
    Honors the frozen-gain negative-control flag so that the consistency
    check compares like with like.
    """
    sc = trace.scenario
    design = trace.design
    params = trace.params
    tails, heads = sc.tree.edge_arrays()
    pos, vel = trace.pos, trace.vel
    m, n = pos.shape[0], pos.shape[1]

    dx = pos[:, heads, :] - pos[:, tails, :]
    d2 = np.einsum("tej,tej->te", dx, dx)
    r2 = params.r * params.r
    den = r2 - d2 + params.Q
    pq = params.P * (r2 + params.Q)
    w = 2.0 * pq / den**2

    theta = np.zeros_like(pos)
    lam2 = np.array([mod.lambda2 for mod in sc.models])
    cor_c = np.array([mod.c for mod in sc.models])
    eta = np.asarray(design.eta)
    gam = np.asarray(design.gamma)
    zet = np.asarray(design.zeta)
    lsum = np.zeros((m, n))
    for k in range(len(tails)):
        t_i, h_i = tails[k], heads[k]
        contrib = w[:, k, None] * dx[:, k, :]
        theta[:, t_i, :] -= contrib
        theta[:, h_i, :] += contrib
        for robot in (t_i, h_i):
            den4 = den[:, k] ** 4
            den6 = den4 * den[:, k] ** 2
            lsum[:, robot] += (
                16.0 * lam2[robot] ** 2 * pq**2 * d2[:, k] ** 2 / (eta[robot] * den6)
                + lam2[robot] ** 2 * pq**2 / (gam[robot] * den4)
                + cor_c[robot] ** 2 * pq**2 * d2[:, k] / (2.0 * zet[robot] * den4)
            )

    gains = 0.5 * design.rho * lam2[None, :] + design.sigma * lsum
    gains[:, 0] += design.informed_gain_term()
    if sc.freeze_gain_schedule:
        gains = np.tile(gains[0], (m, 1))

    s = vel + design.sigma * theta
    big_b = np.asarray(design.B)
    big_d = np.asarray(design.D)
    u = -gains[:, :, None] * s - big_d[None, :, None] * vel - big_b[None, :, None] * theta

    vp = np.sum(params.P * d2 / den, axis=1)
    denom = design.coupling_denominators()
    kin = np.zeros((m, n))
    for i, model in enumerate(sc.models):
        s0, s1 = s[:, i, 0], s[:, i, 1]
        if model.kind == POINT_MASS:
            kin[:, i] = model.params[0] * (s0**2 + s1**2)
        else:
            a1, a2, a3 = model.params
            c2 = np.cos(pos[:, i, 1])
            m11 = a1 + 2.0 * a3 * c2
            m12 = a2 + a3 * c2
            kin[:, i] = m11 * s0**2 + 2.0 * m12 * s0 * s1 + a2 * s1**2
    v = vp + 0.5 * np.sum(kin / denom[None, :], axis=1)

    return {
        "theta": theta,
        "s": s,
        "K": gains,
        "u": u,
        "vp": vp,
        "v": v,
        "edge_dist": np.sqrt(d2),
        "theta_sq_sum": np.einsum("tij,tij->t", theta, theta),
        "grad_sq_sum": np.sum(w * w * d2, axis=1),
        "lambda_sum": lsum,
    }


def iss_constants(design, params, tree, models):
    """Closed-form sandwich constants (kappa1, kappa2) from the design
    constants and the largest edge-Laplacian eigenvalue."""
    lam_bar = spectral_constants(tree).lambda_L_max
    denom = design.coupling_denominators()
    lam1 = np.array([m.lambda1 for m in models])
    lam2_max = max(m.lambda2 for m in models)
    r2q = params.r**2 + params.Q
    sig2 = design.sigma**2
    kappa1 = (
        max(float(np.max(4.0 * denom / lam1)), 8.0 * sig2 * lam_bar * params.P / r2q)
        + r2q / params.P
    )
    kappa2 = max(
        lam2_max,
        4.0 * sig2 * lam2_max * lam_bar * params.P**2 / (r2q * params.Q) + params.P / params.Q,
    )
    return kappa1, kappa2


def check_invariance(trace, r=None):
    """Every edge strictly inside the communication radius for the whole run."""
    r = trace.params.r if r is None else r
    dist = trace.edge_dist
    k_flat = int(np.argmax(dist))
    margin = float(r - dist.flat[k_flat])
    detail = f"max edge distance {dist.flat[k_flat]:.6g} vs r {r:.6g}"
    if trace.broken:
        detail = f"link broken at step {trace.broken_step}; {detail}"
    return CheckResult(
        name="invariance",
        passed=bool(margin > 0.0) and not trace.broken,
        margin=margin,
        worst_index=k_flat // dist.shape[1],
        detail=detail,
    )


def check_decay(trace, rel_tol=REL_TOL):
    """Energy under the exponential envelope plus the running user-energy
    supremum at every sample."""
    rho, gam = trace.design.rho, trace.design.Gamma
    f_norm = np.linalg.norm(trace.f, axis=1)
    sup_chi = np.maximum.accumulate(chi(f_norm, rho, gam))
    rhs = np.exp(-rho * trace.t) * trace.v[0] + sup_chi
    slack = rhs + rel_tol * (1.0 + rhs) - trace.v
    k = int(np.argmin(slack))
    return CheckResult(
        name="lyapunov_decay",
        passed=bool(np.all(slack >= 0.0)),
        margin=float(rhs[k] - trace.v[k]),
        worst_index=k,
        detail=f"V {trace.v[k]:.6g} vs envelope {rhs[k]:.6g} at t={trace.t[k]:.4g}",
    )


def check_gradient_sandwich(trace, recomputed=None, tol=1e-9):
    """Spectral sandwich on the summed squared gradient pulls, per sample.

    Lower bound: 4*lambda_L*P/(r^2+Q) * V_p. Upper bounds: the tight
    spectral form lambda_L_max * sum ||grad psi||^2 and its V_p version with
    the worst-case denominator constant 4*lambda_L_max*P*(r^2+Q)^2/Q^3.
    (A V_p upper bound built from the d=0 denominator extremum only bounds
    from below; the max-side extremum den = Q gives the constant that
    actually holds on [0, r).)
    """
    rc = recomputed or recompute_trace(trace)
    tree = trace.scenario.tree
    spec = spectral_constants(tree)
    p, q, r2 = trace.params.P, trace.params.Q, trace.params.r**2
    lo = 4.0 * spec.lambda_L * p / (r2 + q) * rc["vp"]
    hi_tight = spec.lambda_L_max * rc["grad_sq_sum"]
    hi_vp = 4.0 * spec.lambda_L_max * p * (r2 + q) ** 2 / q**3 * rc["vp"]
    th = rc["theta_sq_sum"]
    slack_lo = th - lo + tol * np.maximum(1.0, lo)
    slack_hi = np.minimum(hi_tight, hi_vp) - th + tol * np.maximum(1.0, th)
    k_lo = int(np.argmin(slack_lo))
    k_hi = int(np.argmin(slack_hi))
    worst = k_lo if slack_lo[k_lo] <= slack_hi[k_hi] else k_hi
    return CheckResult(
        name="gradient_energy_sandwich",
        passed=bool(np.all(slack_lo >= 0.0) and np.all(slack_hi >= 0.0)),
        margin=float(min(slack_lo[k_lo], slack_hi[k_hi])),
        worst_index=worst,
        detail=f"lower slack {slack_lo[k_lo]:.3g}, upper slack {slack_hi[k_hi]:.3g}",
    )


def check_gain_identity(trace, recomputed=None, tol=1e-12):
    """Compensated gain pinned at rho*lambda_i2/2 at every step (fails by
    construction on frozen-gain negative controls)."""
    rc = recomputed or recompute_trace(trace)
    design = trace.design
    lam2 = np.array([m.lambda2 for m in trace.scenario.models])
    k_bar = trace.gains - design.sigma * rc["lambda_sum"]
    k_bar[:, 0] -= design.informed_gain_term()
    target = 0.5 * design.rho * lam2[None, :]
    err = np.abs(k_bar - target)
    allowed = tol * (1.0 + np.abs(trace.gains))
    k_flat = int(np.argmax(err - allowed))
    return CheckResult(
        name="gain_schedule_identity",
        passed=bool(np.all(err <= allowed)),
        margin=float(np.max(err)),
        worst_index=k_flat // err.shape[1],
        detail="max |K_bar - rho*lambda2/2| (tolerance 1e-12 relative to gain size)",
    )


def check_state_sandwich(trace, rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """Pointwise kappa sandwich: ||phi||^2 <= kappa1 V and V <= kappa2 ||phi||^2."""
    kappa1, kappa2 = iss_constants(
        trace.design, trace.params, trace.scenario.tree, trace.scenario.models
    )
    phi_sq = np.einsum("ij,ij->i", trace.phi(), trace.phi())
    lo_slack = kappa1 * trace.v - phi_sq + rel_tol * np.abs(kappa1 * trace.v) + abs_tol
    hi_slack = kappa2 * phi_sq - trace.v + rel_tol * np.abs(kappa2 * phi_sq) + abs_tol
    k_lo = int(np.argmin(lo_slack))
    k_hi = int(np.argmin(hi_slack))
    worst = k_lo if lo_slack[k_lo] <= hi_slack[k_hi] else k_hi
    return CheckResult(
        name="state_energy_sandwich",
        passed=bool(np.all(lo_slack >= 0.0) and np.all(hi_slack >= 0.0)),
        margin=float(min(lo_slack[k_lo], hi_slack[k_hi])),
        worst_index=worst,
        detail=f"kappa1 {kappa1:.6g}, kappa2 {kappa2:.6g}",
    )


def check_iss(trace, rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """Exponential input-to-state bound on the stacked swarm state.

    Requires a run with intact links (the upper sandwich constant is only
    derived on the invariant edge set); raises PrerequisiteFailed otherwise.
    """
    inv = check_invariance(trace)
    if not inv.passed:
        raise PrerequisiteFailed(
            "ISS bound undefined: invariance check failed for this trace"
        )
    design = trace.design
    kappa1, kappa2 = iss_constants(
        design, trace.params, trace.scenario.tree, trace.scenario.models
    )
    norms = np.linalg.norm(trace.phi(), axis=1)
    sup_f = np.maximum.accumulate(np.linalg.norm(trace.f, axis=1))
    beta = np.sqrt(kappa1 * kappa2) * np.exp(-0.5 * design.rho * trace.t) * norms[0]
    alpha = np.sqrt(kappa1 / (4.0 * design.rho * design.Gamma)) * sup_f
    rhs = beta + alpha
    slack = rhs + rel_tol * rhs + abs_tol - norms
    k = int(np.argmin(slack))
    return CheckResult(
        name="exponential_iss",
        passed=bool(np.all(slack >= 0.0)),
        margin=float(rhs[k] - norms[k]),
        worst_index=k,
        detail=f"||phi|| {norms[k]:.6g} vs bound {rhs[k]:.6g} at t={trace.t[k]:.4g}",
    )


def check_sync(trace, ratio=1e-3, atol=1e-12, rel_tol=REL_TOL):
    """Zero-input synchronization: final speeds and edge lengths below
    ratio times their initial values, inside the rate-rho/2 envelope."""
    if np.any(trace.f != 0.0):
        raise WrongProfile("synchronization check requires a zero-force trace")
    speeds = np.linalg.norm(trace.vel, axis=2).max(axis=1)
    dists = trace.edge_dist.max(axis=1)
    v_ok = speeds[-1] <= max(ratio * speeds[0], atol)
    d_ok = dists[-1] <= max(ratio * dists[0], atol)

    design = trace.design
    kappa1, kappa2 = iss_constants(
        design, trace.params, trace.scenario.tree, trace.scenario.models
    )
    norms = np.linalg.norm(trace.phi(), axis=1)
    envelope = np.sqrt(kappa1 * kappa2) * np.exp(-0.5 * design.rho * trace.t) * norms[0]
    env_slack = envelope + rel_tol * envelope + atol - norms
    env_ok = bool(np.all(env_slack >= 0.0))
    k = int(np.argmin(env_slack))
    margin = min(
        max(ratio * speeds[0], atol) - speeds[-1],
        max(ratio * dists[0], atol) - dists[-1],
    )
    return CheckResult(
        name="synchronization",
        passed=bool(v_ok and d_ok and env_ok),
        margin=float(margin),
        worst_index=k if not env_ok else trace.n_samples - 1,
        detail=(
            f"final/initial speed {speeds[-1]:.3g}/{speeds[0]:.3g}, "
            f"edge {dists[-1]:.3g}/{dists[0]:.3g}, envelope ok {env_ok}"
        ),
    )


def check_boundedness(trace, rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """State stays finite and under the time-zero ISS ceiling throughout."""
    phi = trace.phi()
    if not np.all(np.isfinite(phi)):
        return CheckResult(
            name="boundedness", passed=False, margin=-np.inf, detail="non-finite state"
        )
    design = trace.design
    kappa1, kappa2 = iss_constants(
        design, trace.params, trace.scenario.tree, trace.scenario.models
    )
    norms = np.linalg.norm(phi, axis=1)
    ceiling = np.sqrt(kappa1 * kappa2) * norms[0] + np.sqrt(
        kappa1 / (4.0 * design.rho * design.Gamma)
    ) * float(np.max(np.linalg.norm(trace.f, axis=1)))
    slack = ceiling * (1.0 + rel_tol) + abs_tol - norms
    k = int(np.argmin(slack))
    return CheckResult(
        name="boundedness",
        passed=bool(np.all(slack >= 0.0)),
        margin=float(ceiling - norms[k]),
        worst_index=k,
        detail=f"max ||phi|| {norms.max():.6g} vs ceiling {ceiling:.6g}",
    )


def check_consistency(trace, recomputed=None, tol=1e-10):
    """Logged quantities match their recomputation from raw state samples."""
    rc = recomputed or recompute_trace(trace)
    worst = 0.0
    worst_name = ""
    for name, logged, fresh in (
        ("V_p", trace.vp, rc["vp"]),
        ("V", trace.v, rc["v"]),
        ("edge_dist", trace.edge_dist, rc["edge_dist"]),
        ("K", trace.gains, rc["K"]),
        ("u", trace.u, rc["u"]),
    ):
        scale = 1.0 + np.abs(np.asarray(fresh))
        err = float(np.max(np.abs(np.asarray(logged) - np.asarray(fresh)) / scale))
        if err > worst:
            worst, worst_name = err, name
    return CheckResult(
        name="log_consistency",
        passed=bool(worst <= tol),
        margin=float(tol - worst),
        detail=f"largest relative mismatch {worst:.3g} in {worst_name or 'n/a'}",
    )


def check_design(scenario, design, params, tol=1e-9):
    """Independently re-verify every design condition with numeric margins."""
    from .controller import damping_slack, theta_all as _theta_all

    tree = scenario.tree
    n = tree.n_vertices
    report = CertificateReport()
    line1, line2 = selection_margins(
        params.r, params.epsilon, n, params.Q, params.P, design.Delta
    )
    report.add(
        CheckResult("feasibility_line1", passed=line1 > 0.0, margin=float(line1))
    )
    report.add(
        CheckResult("headroom_line2", passed=line2 > 0.0, margin=float(line2))
    )

    slack = damping_slack(design, tree)
    report.add(
        CheckResult(
            "damping_slack",
            passed=bool(np.all(slack >= -tol)),
            margin=float(np.min(slack)),
            detail="D_i minus the splitter sum rule",
        )
    )

    lam_l = algebraic_connectivity(tree)
    denom = design.coupling_denominators()
    bound = (
        design.rho
        * (params.r**2 + params.Q)
        / (4.0 * lam_l)
        * float(np.max(denom / (design.sigma * np.asarray(design.B))))
    )
    report.add(
        CheckResult(
            "decay_rate_bound",
            passed=params.P >= bound,
            margin=float(params.P - bound),
            detail=f"P {params.P:.6g} vs bound {bound:.6g}",
        )
    )

    lam2 = np.array([m.lambda2 for m in scenario.models])
    s0 = scenario.v0 + design.sigma * _theta_all(scenario.x0, tree, params)
    delta_expected = 0.5 * float(
        np.sum(lam2 / denom * np.einsum("ij,ij->i", s0, s0))
    ) + design.f_bar**2 / (4.0 * design.rho * design.Gamma)
    err = abs(design.Delta - delta_expected)
    report.add(
        CheckResult(
            "delta_fixed_point",
            passed=err <= tol * max(1.0, delta_expected),
            margin=float(tol * max(1.0, delta_expected) - err),
            detail=f"Delta {design.Delta:.6g} vs recomputed {delta_expected:.6g}",
        )
    )

    vp0 = total_potential(scenario.x0, tree, params)
    head = params.psi_max - (vp0 + design.Delta)
    report.add(
        CheckResult(
            "initial_headroom",
            passed=head > 0.0,
            margin=float(head),
            detail=f"V_p(0)+Delta {vp0 + design.Delta:.6g} vs psi_max {params.psi_max:.6g}",
        )
    )
    return report


def verify_trace(trace):
    """Run every applicable certificate check on a trace."""
    report = CertificateReport()
    rc = recompute_trace(trace)
    report.add(check_consistency(trace, rc))
    inv = check_invariance(trace)
    report.add(inv)
    premise, conclusion = check_energy_invariance(trace, trace.params, trace.design.Delta)
    report.add(premise)
    report.add(conclusion)
    report.add(check_gradient_sandwich(trace, rc))
    report.add(check_gain_identity(trace, rc))
    report.add(check_decay(trace))
    report.add(check_state_sandwich(trace))
    if inv.passed:
        report.add(check_iss(trace))
    else:
        report.add(
            CheckResult(
                name="exponential_iss",
                passed=False,
                margin=-np.inf,
                detail="prerequisite failed: invariance does not hold",
            )
        )
    report.add(check_boundedness(trace))
    if not np.any(trace.f != 0.0):
        report.add(check_sync(trace))
    return report

"""Distributed coupling + damping-injection control with a state-dependent
gain schedule, and the end-to-end gain design pipeline.

Each robot applies u_i = -K_i(t) s_i - D_i xd_i - B_i theta_i, where s_i is
the sliding surface xd_i + sigma*theta_i and theta_i sums the link-potential
gradients toward the robot's initial neighbours. K_i(t) grows with the
per-edge terms Lambda_ij so that the compensated gain K_i - sigma*sum(Lambda)
- (informed-slave term) stays pinned at rho*lambda_i2/2, which is what makes
the energy decay rate rho certifiable.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import coriolis_matrix, mass_matrix
from .errors import DesignInfeasible, OutOfDomain
from .graph import algebraic_connectivity
from .potential import PotentialParams, grad_psi, select_P, select_Q, total_potential

DEFAULT_HEURISTICS = {
    "rho": 0.5,
    "sigma": 0.1,
    "eta": 0.5,
    "gamma": 0.5,
    "zeta": 0.5,
    "Gamma": 1.0,
    "B": 1.0,
}


@dataclass(frozen=True)
class GainDesign:
    """Complete set of control constants for one scenario.

    eta/gamma/zeta are the per-robot Young-inequality splitters, B the
    coupling gains, D the damping gains (set so the damping slack is exactly
    zero), Delta the energy headroom budgeted for the initial surfaces plus
    the worst-case user command, f_bar the command bound.
    """

    rho: float
    sigma: float
    eta: tuple
    gamma: tuple
    zeta: tuple
    Gamma: float
    B: tuple
    D: tuple
    Delta: float
    f_bar: float

    def coupling_denominators(self):
        return np.asarray(self.B) + self.sigma * np.asarray(self.D)

    def informed_gain_term(self):
        """Extra gain carried only by robot 1 to absorb the user command."""
        d1 = self.B[0] + self.sigma * self.D[0]
        return self.Gamma / (d1 * d1)

    def to_dict(self):
        return {
            "rho": self.rho,
            "sigma": self.sigma,
            "eta": list(self.eta),
            "gamma": list(self.gamma),
            "zeta": list(self.zeta),
            "Gamma": self.Gamma,
            "B": list(self.B),
            "D": list(self.D),
            "Delta": self.Delta,
            "f_bar": self.f_bar,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            rho=float(d["rho"]),
            sigma=float(d["sigma"]),
            eta=tuple(d["eta"]),
            gamma=tuple(d["gamma"]),
            zeta=tuple(d["zeta"]),
            Gamma=float(d["Gamma"]),
            B=tuple(d["B"]),
            D=tuple(d["D"]),
            Delta=float(d["Delta"]),
            f_bar=float(d["f_bar"]),
        )


@dataclass(frozen=True)
class ControlOutput:
    """Control force plus the intermediate quantities it was built from."""

    u: np.ndarray
    K: float
    s: np.ndarray
    theta: np.ndarray
    lambda_sum: float


def theta(i, positions, tree, params):
    """Gradient pull on robot i from its initial neighbours (local: uses
    only robot i's own position and its neighbours' positions)."""
    x = np.asarray(positions, dtype=float)
    out = np.zeros(x.shape[1])
    for j in tree.neighbors(i):
        out += grad_psi(x[i - 1], x[j - 1], params)
    return out


def theta_all(positions, tree, params):
    """All gradient pulls at once, one row per robot."""
    x = np.asarray(positions, dtype=float)
    tails, heads = tree.edge_arrays()
    dx = x[heads] - x[tails]
    d2 = np.einsum("ij,ij->i", dx, dx)
    r2 = params.r * params.r
    if np.any(d2 >= r2):
        raise OutOfDomain("an edge is at or beyond the communication radius")
    w = 2.0 * params.P * (r2 + params.Q) / (r2 - d2 + params.Q) ** 2
    th = np.zeros_like(x)
    np.add.at(th, tails, -w[:, None] * dx)
    np.add.at(th, heads, w[:, None] * dx)
    return th


def theta_dot(i, positions, velocities, tree, params):
    """Closed-form time derivative of theta_i along the current velocities."""
    x = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    r2 = params.r * params.r
    pq = params.P * (r2 + params.Q)
    out = np.zeros(x.shape[1])
    for j in tree.neighbors(i):
        dx = x[i - 1] - x[j - 1]
        dv = v[i - 1] - v[j - 1]
        d2 = float(dx @ dx)
        if d2 >= r2:
            raise OutOfDomain("edge at or beyond the communication radius")
        den = r2 - d2 + params.Q
        out += 8.0 * pq * float(dx @ dv) / den**3 * dx + 2.0 * pq / den**2 * dv
    return out


def surface(state_i, theta_i, sigma):
    """Sliding surface s_i = xd_i + sigma * theta_i."""
    return np.asarray(state_i.xdot, dtype=float) + sigma * np.asarray(theta_i, dtype=float)


def lambda_ij(dist_sq, model_bounds, splitters, params):
    """Per-edge gain schedule term; strictly increasing in squared distance.

    model_bounds is (lambda2, c) of the robot the gain belongs to, splitters
    its (eta, gamma, zeta). The three terms absorb, in order, the
    inertia-times-curvature, inertia-times-relative-velocity and Coriolis
    parts of the surface mismatch.
    """
    lam2, cor_c = model_bounds
    eta, gam, zet = splitters
    r2 = params.r * params.r
    if dist_sq >= r2:
        raise OutOfDomain("distance at or beyond the communication radius")
    den = r2 - dist_sq + params.Q
    pq = params.P * (r2 + params.Q)
    t1 = 16.0 * lam2**2 * pq**2 * dist_sq**2 / (eta * den**6)
    t2 = lam2**2 * pq**2 / (gam * den**4)
    t3 = cor_c**2 * pq**2 * dist_sq / (2.0 * zet * den**4)
    return t1 + t2 + t3


def lambda_sum(i, positions, tree, design, params, model_bounds):
    """Sum of lambda_ij over robot i's initial neighbours."""
    x = np.asarray(positions, dtype=float)
    k = i - 1
    splitters = (design.eta[k], design.gamma[k], design.zeta[k])
    total = 0.0
    for j in tree.neighbors(i):
        diff = x[k] - x[j - 1]
        total += lambda_ij(float(diff @ diff), model_bounds, splitters, params)
    return total


def gain_K(i, positions, tree, design, params, model_bounds):
    """State-dependent gain: the floor rho*lambda_i2/2 plus the scheduled
    sigma-weighted lambda sum, plus the user-energy term on the informed
    slave only. By construction the compensated gain equals the floor."""
    lam2 = model_bounds[0]
    k = 0.5 * design.rho * lam2 + design.sigma * lambda_sum(
        i, positions, tree, design, params, model_bounds
    )
    if i == 1:
        k += design.informed_gain_term()
    return k


def control(i, positions, velocities, tree, design, params, model_bounds):
    """Evaluate the control law for robot i from local information only."""
    v = np.asarray(velocities, dtype=float)
    th = theta(i, positions, tree, params)
    lam_sum = lambda_sum(i, positions, tree, design, params, model_bounds)
    k = 0.5 * design.rho * model_bounds[0] + design.sigma * lam_sum
    if i == 1:
        k += design.informed_gain_term()
    s = v[i - 1] + design.sigma * th
    u = -k * s - design.D[i - 1] * v[i - 1] - design.B[i - 1] * th
    return ControlOutput(u=u, K=k, s=s, theta=th, lambda_sum=lam_sum)


def mismatch_delta(i, positions, velocities, tree, params, model):
    """Surface-transform mismatch M_i*thetadot_i + C_i*theta_i (diagnostic)."""
    x = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    th = theta(i, positions, tree, params)
    thd = theta_dot(i, positions, velocities, tree, params)
    m = mass_matrix(model, x[i - 1])
    c = coriolis_matrix(model, x[i - 1], v[i - 1])
    return m @ thd + c @ th


def mismatch_budget(i, positions, velocities, tree, design, params, model_bounds):
    """Upper bound on s_i^T Delta_i implied by the splitters: the lambda_ij
    terms on s_i plus velocity quadratics of the robot and its neighbours."""
    x = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    k = i - 1
    th = theta(i, positions, tree, params)
    s = v[k] + design.sigma * th
    s_sq = float(s @ s)
    vi_sq = float(v[k] @ v[k])
    eta, gam, zet = design.eta[k], design.gamma[k], design.zeta[k]
    total = 0.0
    for j in tree.neighbors(i):
        diff = x[k] - x[j - 1]
        lam = lambda_ij(float(diff @ diff), model_bounds, (eta, gam, zet), params)
        vj_sq = float(v[j - 1] @ v[j - 1])
        total += lam * s_sq + 2.0 * (eta + gam) * vj_sq + 2.0 * (eta + gam + zet) * vi_sq
    return total


def damping_gains(tree, sigma, eta, gamma, zeta):
    """Minimal damping meeting the slack condition with equality: D_i =
    2*sigma*sum over neighbours of (eta_i+gamma_i+zeta_i+eta_j+gamma_j)."""
    n = tree.n_vertices
    d = np.zeros(n)
    for i in range(1, n + 1):
        acc = 0.0
        for j in tree.neighbors(i):
            acc += eta[i - 1] + gamma[i - 1] + zeta[i - 1] + eta[j - 1] + gamma[j - 1]
        d[i - 1] = 2.0 * sigma * acc
    return d


def damping_slack(design, tree):
    """Per-robot damping left over after absorbing the mismatch velocity
    quadratics; nonnegative for a valid design (zero under the default rule)."""
    want = damping_gains(tree, design.sigma, design.eta, design.gamma, design.zeta)
    return np.asarray(design.D) - want


def _per_robot(value, n, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or one value per robot")
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} must be positive")
    return arr


def design_gains(scenario, max_sigma_halvings=10, max_rounds=64):
    """Run the five-step design pipeline for a scenario.

    Steps: heuristics (defaults above, overridable), damping by the equality
    rule, Q selection, then P large enough for both the decay-rate bound and
    the headroom condition. Delta depends on the initial surfaces, which
    depend on P through theta, so P and Delta are resolved as a fixed point;
    if the iteration fails to converge, sigma is halved (the P-dependent
    part of Delta scales with sigma^2) and the pipeline restarts.

    Returns (GainDesign, PotentialParams). Raises DesignInfeasible with the
    blocking condition named.
    """
    tree = scenario.tree
    models = scenario.models
    n = tree.n_vertices
    r, eps, f_bar = scenario.r, scenario.epsilon, scenario.f_bar
    if not 0.0 < eps < r:
        raise DesignInfeasible(
            f"initial margin condition requires 0 < epsilon < r, got epsilon={eps}, r={r}"
        )

    x0 = np.asarray(scenario.x0, dtype=float)
    v0 = np.asarray(scenario.v0, dtype=float)
    tails, heads = tree.edge_arrays()
    d0 = np.linalg.norm(x0[heads] - x0[tails], axis=1)
    if np.any(d0 >= r - eps):
        raise DesignInfeasible(
            f"initial edge length {d0.max():.6g} is not strictly below r - epsilon = {r - eps:.6g}"
        )

    ov = dict(scenario.design_overrides or {})
    rho = float(ov.pop("rho", DEFAULT_HEURISTICS["rho"]))
    sigma = float(ov.pop("sigma", DEFAULT_HEURISTICS["sigma"]))
    eta = _per_robot(ov.pop("eta", DEFAULT_HEURISTICS["eta"]), n, "eta")
    gamma = _per_robot(ov.pop("gamma", DEFAULT_HEURISTICS["gamma"]), n, "gamma")
    zeta = _per_robot(ov.pop("zeta", DEFAULT_HEURISTICS["zeta"]), n, "zeta")
    big_gamma = float(ov.pop("Gamma", DEFAULT_HEURISTICS["Gamma"]))
    b = _per_robot(ov.pop("B", DEFAULT_HEURISTICS["B"]), n, "B")
    if ov:
        raise ValueError(f"unknown design overrides: {sorted(ov)}")
    if rho <= 0.0 or sigma <= 0.0 or big_gamma <= 0.0:
        raise ValueError("rho, sigma, Gamma must be positive")

    lam_l = algebraic_connectivity(tree)
    lam2 = np.array([m.lambda2 for m in models])
    r2 = r * r
    q = select_Q(r, eps, n)
    delta_force = f_bar * f_bar / (4.0 * rho * big_gamma)

    for _ in range(max_sigma_halvings):
        d = damping_gains(tree, sigma, eta, gamma, zeta)
        denom = b + sigma * d
        rate_bound = rho * (r2 + q) / (4.0 * lam_l) * float(np.max(denom / (sigma * b)))

        delta = delta_force + 0.5 * float(
            np.sum(lam2 / denom * np.einsum("ij,ij->i", v0, v0))
        )
        p_prev = None
        converged = False
        for _round in range(max_rounds):
            p = select_P(r, eps, n, q, delta, rate_bound)
            params = PotentialParams(P=p, Q=q, r=r, epsilon=eps)
            s0 = v0 + sigma * theta_all(x0, tree, params)
            delta_new = delta_force + 0.5 * float(
                np.sum(lam2 / denom * np.einsum("ij,ij->i", s0, s0))
            )
            if not np.isfinite(delta_new):
                break
            if (
                p_prev is not None
                and abs(p - p_prev) <= 1e-9 * max(1.0, p_prev)
                and abs(delta_new - delta) <= 1e-9 * max(1.0, delta)
            ):
                delta = delta_new
                converged = True
                break
            p_prev = p
            delta = delta_new

        if converged:
            vp0 = total_potential(x0, tree, params)
            if vp0 + delta < params.psi_max:
                design = GainDesign(
                    rho=rho,
                    sigma=sigma,
                    eta=tuple(float(v) for v in eta),
                    gamma=tuple(float(v) for v in gamma),
                    zeta=tuple(float(v) for v in zeta),
                    Gamma=big_gamma,
                    B=tuple(float(v) for v in b),
                    D=tuple(float(v) for v in d),
                    Delta=float(delta),
                    f_bar=f_bar,
                )
                return design, params
        sigma *= 0.5

    raise DesignInfeasible(
        "P/Delta fixed point did not converge: the headroom condition "
        "V_p(0) + Delta < psi_max kept failing as sigma was halved"
    )

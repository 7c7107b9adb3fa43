"""Distance-based link potential, its gradient, and the (P, Q) selection rules.

The potential of one link is P*d^2/(r^2 - d^2 + Q), finite on [0, r] with
maximum psi_max = P*r^2/Q at d = r. All evaluators work from the squared
distance so the hot path never takes a square root.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfDomain
from .reporting import CheckResult


@dataclass(frozen=True)
class PotentialParams:
    """Energy-scale P, barrier offset Q, communication radius r and the
    initial margin epsilon (Assumption: initial edges are shorter than
    r - epsilon)."""

    P: float
    Q: float
    r: float
    epsilon: float
    psi_max: float = field(init=False)

    def __post_init__(self):
        if min(self.P, self.Q, self.r, self.epsilon) <= 0.0:
            raise ValueError("P, Q, r, epsilon must all be positive")
        if self.epsilon >= self.r:
            raise ValueError("epsilon must be smaller than r")
        object.__setattr__(self, "psi_max", self.P * self.r**2 / self.Q)


def psi(dist_sq, params):
    """Link potential from squared distance; raises OutOfDomain past r."""
    r2 = params.r * params.r
    if dist_sq < 0.0 or dist_sq > r2:
        raise OutOfDomain(f"squared distance {dist_sq} outside [0, r^2]")
    return params.P * dist_sq / (r2 - dist_sq + params.Q)


def grad_psi(x_i, x_j, params):
    """Gradient of the link potential with respect to x_i.

    Equals 2P(r^2+Q)/(r^2 - ||x_ij||^2 + Q)^2 * (x_i - x_j); antisymmetric
    under swapping the endpoints.
    """
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    diff = x_i - x_j
    d2 = float(diff @ diff)
    r2 = params.r * params.r
    if d2 >= r2:
        raise OutOfDomain(f"||x_ij|| = {np.sqrt(d2)} not strictly below r = {params.r}")
    den = r2 - d2 + params.Q
    return 2.0 * params.P * (r2 + params.Q) / den**2 * diff


def total_potential(positions, tree, params):
    """Energy stored in all initial links: one psi term per undirected edge
    (the half factor in the double neighbour sum cancels the double count)."""
    x = np.asarray(positions, dtype=float)
    tails, heads = tree.edge_arrays()
    dx = x[heads] - x[tails]
    d2 = np.einsum("ij,ij->i", dx, dx)
    r2 = params.r * params.r
    if np.any(d2 >= r2):
        raise OutOfDomain("an edge is at or beyond the communication radius")
    return float(np.sum(params.P * d2 / (r2 - d2 + params.Q)))


def select_Q(r, epsilon, n_vertices):
    """Pick Q so that [r^2-(N-1)(r-eps)^2]Q + [r^2-(r-eps)^2]r^2 > 0.

    When the Q coefficient is negative the feasible set is a bounded
    interval; return half its upper bound. Otherwise any positive value
    works and 1 is returned. Deterministic so designs are reproducible.
    """
    r2 = r * r
    shrunk = (r - epsilon) ** 2
    coeff = r2 - (n_vertices - 1) * shrunk
    if coeff >= 0.0:
        return 1.0
    upper = (r2 - shrunk) * r2 / -coeff
    return 0.5 * upper


def select_P(r, epsilon, n_vertices, Q, Delta, rate_bound=0.0):
    """Pick P above both feasibility lower bounds with 5% headroom.

    The first bound keeps psi_max above the initial energy plus the Delta
    headroom; the second is the decay-rate bound supplied by the gain
    designer. Floors at 1 when both bounds are degenerate.
    """
    r2 = r * r
    shrunk = (r - epsilon) ** 2
    den = (r2 - shrunk + Q) * r2 - (n_vertices - 1) * Q * shrunk
    if den <= 0.0:
        raise ValueError("Q violates the feasibility condition; use select_Q first")
    bound = (r2 - shrunk + Q) * Q * Delta / den
    return max(1.05 * max(bound, rate_bound), 1.0)


def selection_margins(r, epsilon, n_vertices, Q, P, Delta):
    """Slack of both selection inequalities (positive means satisfied)."""
    r2 = r * r
    shrunk = (r - epsilon) ** 2
    line1 = (r2 - (n_vertices - 1) * shrunk) * Q + (r2 - shrunk) * r2
    den = (r2 - shrunk + Q) * r2 - (n_vertices - 1) * Q * shrunk
    line2 = P - (r2 - shrunk + Q) * Q * Delta / den if den > 0.0 else -np.inf
    return line1, line2


def check_energy_invariance(trace, params, Delta, rel_tol=1e-6):
    """Scan a trace for the set-invariance premise and conclusion.

    Premise: total link energy never exceeds its initial value plus Delta.
    Conclusion: every edge stays strictly inside the communication radius.
    Returns a pair of CheckResults; failures are reported, never raised.
    """
    vp = np.asarray(trace.vp)
    ceiling = vp[0] + Delta
    slack = ceiling + rel_tol * (1.0 + abs(ceiling)) - vp
    k = int(np.argmin(slack))
    premise = CheckResult(
        name="invariance_energy_premise",
        passed=bool(np.all(slack >= 0.0)),
        margin=float(ceiling - vp[k]),
        worst_index=k,
        detail=f"max V_p {vp[k]:.6g} vs V_p(0)+Delta {ceiling:.6g}",
    )

    dist = np.asarray(trace.edge_dist)
    worst_flat = int(np.argmax(dist))
    k = worst_flat // dist.shape[1]
    margin = float(params.r - dist.flat[worst_flat])
    conclusion = CheckResult(
        name="invariance_distance_conclusion",
        passed=bool(margin > 0.0) and not trace.broken,
        margin=margin,
        worst_index=k,
        detail=f"max edge distance {dist.flat[worst_flat]:.6g} vs r {params.r}",
    )
    return premise, conclusion

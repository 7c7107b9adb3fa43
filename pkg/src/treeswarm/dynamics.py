"""Euler-Lagrange robot models with certified inertia and Coriolis bounds.

Two kinds cover the property space at desk scale: a planar point mass
(diagonal constant inertia, no Coriolis effects) and a two-link planar arm
in joint space (configuration-dependent inertia, nontrivial Coriolis
matrix). Both have n = 2 degrees of freedom. Gravity and friction are not
modelled.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularInertia

POINT_MASS = "point-mass"
TWO_LINK = "two-link"


@dataclass(frozen=True)
class RobotModel:
    """Immutable model: kind-specific parameters plus bound constants.

    params is (m,) for a point mass and the reduced inertia triple
    (a1, a2, a3) for a two-link arm, where
        M = [[a1 + 2 a3 cos q2, a2 + a3 cos q2], [a2 + a3 cos q2, a2]].
    lambda1/lambda2 bound the inertia eigenvalues, c the Coriolis norm
    constant ||C(x, y) z|| <= c ||y|| ||z||.
    """

    kind: str
    dof: int
    params: tuple
    lambda1: float
    lambda2: float
    c: float


@dataclass(frozen=True)
class RobotState:
    """Position and velocity vectors of one robot."""

    x: np.ndarray
    xdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xdot", np.asarray(self.xdot, dtype=float))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xdot))):
            raise ValueError("robot state must be finite")


def point_mass(mass):
    """Planar point-mass model; bounds are exact."""
    m = float(mass)
    if m <= 0.0:
        raise ValueError("mass must be positive")
    return RobotModel(kind=POINT_MASS, dof=2, params=(m,), lambda1=m, lambda2=m, c=0.0)


def two_link(m1, m2, l1, l2, lc1=None, lc2=None, I1=None, I2=None):
    """Two-link planar arm from link masses/lengths.

    Centres of mass default to mid-link and link inertias to the slender-rod
    value m*l^2/12 (strictly positive, which keeps the inertia matrix
    positive definite at every configuration).
    """
    lc1 = l1 / 2.0 if lc1 is None else lc1
    lc2 = l2 / 2.0 if lc2 is None else lc2
    I1 = m1 * l1**2 / 12.0 if I1 is None else I1
    I2 = m2 * l2**2 / 12.0 if I2 is None else I2
    if min(m1, m2, l1, l2, lc1, lc2, I1, I2) <= 0.0:
        raise ValueError("all two-link parameters must be positive")
    a1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2) + I1 + I2
    a2 = m2 * lc2**2 + I2
    a3 = m2 * l1 * lc2
    provisional = RobotModel(
        kind=TWO_LINK, dof=2, params=(a1, a2, a3), lambda1=np.nan, lambda2=np.nan, c=np.nan
    )
    lam1, lam2, c = certify_bounds(provisional)
    return replace(provisional, lambda1=lam1, lambda2=lam2, c=c)


def mass_matrix(model, x):
    """Symmetric positive-definite inertia matrix at configuration x."""
    if model.kind == POINT_MASS:
        return model.params[0] * np.eye(2)
    a1, a2, a3 = model.params
    c2 = np.cos(x[1])
    m12 = a2 + a3 * c2
    return np.array([[a1 + 2.0 * a3 * c2, m12], [m12, a2]])


def coriolis_matrix(model, x, xdot):
    """Coriolis/centrifugal matrix; linear in xdot and paired with the
    inertia so that d(M)/dt - 2C is skew-symmetric."""
    if model.kind == POINT_MASS:
        return np.zeros((2, 2))
    _, _, a3 = model.params
    s2 = np.sin(x[1])
    q1d, q2d = xdot
    return a3 * s2 * np.array([[-q2d, -(q1d + q2d)], [q1d, 0.0]])


def accel(model, state, total_force):
    """Acceleration from the equations of motion: M xdd = force - C xd."""
    m = mass_matrix(model, state.x)
    rhs = np.asarray(total_force, dtype=float) - coriolis_matrix(model, state.x, state.xdot) @ state.xdot
    try:
        return np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularInertia(f"inertia solve failed for {model.kind}") from exc


def kinetic_energy(model, state):
    """0.5 * xd^T M(x) xd; conserved for an unforced model."""
    m = mass_matrix(model, state.x)
    return 0.5 * float(state.xdot @ m @ state.xdot)


def certify_bounds(model, n_samples=4096, margin=0.1):
    """Sample the workspace for inertia eigenvalue bounds and the Coriolis
    norm constant, then widen by a 10% safety margin.

    Point masses are exact. For the arm the inertia depends only on the
    second joint angle, which is swept densely with endpoints included;
    the Coriolis sweep is over velocity directions. Deterministic.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples for trustworthy bounds")
    if model.kind == POINT_MASS:
        m = model.params[0]
        return m, m, 0.0

    a1, a2, a3 = model.params
    q2 = np.linspace(-np.pi, np.pi, n_samples)
    c2 = np.cos(q2)
    m11 = a1 + 2.0 * a3 * c2
    m12 = a2 + a3 * c2
    tr = m11 + a2
    gap = np.sqrt(0.25 * (m11 - a2) ** 2 + m12**2)
    lo = float(np.min(0.5 * tr - gap))
    hi = float(np.max(0.5 * tr + gap))

    # C factors as a3*sin(q2)*A(y/||y||)*||y||, so sweep the velocity
    # direction and take the exact operator norm of each 2x2 sample
    phi = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    y1, y2 = np.cos(phi), np.sin(phi)
    tr = 1.0 + (y1 + y2) ** 2
    det = (y1 + y2) ** 2 * y1**2
    sig_sq = 0.5 * tr + np.sqrt(np.maximum(0.25 * tr**2 - det, 0.0))
    ratio = abs(a3) * float(np.sqrt(np.max(sig_sq)))

    return (1.0 - margin) * lo, (1.0 + margin) * hi, (1.0 + margin) * ratio

"""Connectivity-preserving swarm teleoperation workbench.

Design gains for a tree-networked slave swarm, simulate the closed loop
deterministically, certify the connectivity/decay/ISS guarantees
numerically, and drive the swarm live over WebSocket.
"""

from .backend import DEFAULT_BACKEND, available_backends, get_backend
from .controller import ControlOutput, GainDesign, control, design_gains
from .dynamics import RobotModel, RobotState, point_mass, two_link
from .errors import (
    BadIndex,
    DesignInfeasible,
    EdgeTooLong,
    LinkBroken,
    NonPositiveWeight,
    NotATree,
    OutOfDomain,
    PrerequisiteFailed,
    ScenarioError,
    SingularInertia,
    TreeswarmError,
    WrongProfile,
)
from .graph import SpectralConstants, TreeNetwork, build_tree, spectral_constants
from .potential import PotentialParams
from .scenario import ForceProfile, Scenario, load_scenario, parse_scenario, random_scenario
from .simulator import SimTrace, force_at, run, step
from .verifier import check_design, verify_trace

__version__ = "0.1.0"

__all__ = [
    "BadIndex",
    "ControlOutput",
    "DEFAULT_BACKEND",
    "DesignInfeasible",
    "EdgeTooLong",
    "ForceProfile",
    "GainDesign",
    "LinkBroken",
    "NonPositiveWeight",
    "NotATree",
    "OutOfDomain",
    "PotentialParams",
    "PrerequisiteFailed",
    "RobotModel",
    "RobotState",
    "Scenario",
    "ScenarioError",
    "SimTrace",
    "SingularInertia",
    "SpectralConstants",
    "TreeNetwork",
    "TreeswarmError",
    "WrongProfile",
    "available_backends",
    "build_tree",
    "check_design",
    "control",
    "design_gains",
    "force_at",
    "get_backend",
    "load_scenario",
    "parse_scenario",
    "point_mass",
    "random_scenario",
    "run",
    "spectral_constants",
    "step",
    "two_link",
    "verify_trace",
]

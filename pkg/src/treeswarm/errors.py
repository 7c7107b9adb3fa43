"""Exception types shared across the workbench."""


class TreeswarmError(Exception):
    """Base class for all workbench errors."""


class NotATree(TreeswarmError):
    """Edge list does not describe a connected acyclic graph."""


class BadIndex(TreeswarmError):
    """Vertex index outside {1..N}."""


class NonPositiveWeight(TreeswarmError):
    """Edge weight must be strictly positive."""


class OutOfDomain(TreeswarmError):
    """Inter-robot distance at or beyond the communication radius, where
    the link potential is undefined."""


class EdgeTooLong(OutOfDomain):
    """A network edge is at or beyond the communication radius."""


class SingularInertia(TreeswarmError):
    """Inertia solve failed; impossible for a valid model and treated as fatal."""


class DesignInfeasible(TreeswarmError):
    """Gain design cannot satisfy its feasibility conditions; the message
    names the blocking inequality."""


class LinkBroken(TreeswarmError):
    """A simulated link reached the communication radius."""


class WrongProfile(TreeswarmError):
    """Check applied to a trace generated with an incompatible force profile."""


class PrerequisiteFailed(TreeswarmError):
    """A check whose derivation assumes an earlier check cannot run because
    that check failed."""


class ScenarioError(TreeswarmError):
    """Scenario file violates the schema or a validity precondition."""

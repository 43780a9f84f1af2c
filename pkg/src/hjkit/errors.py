"""Exception hierarchy shared by all hjkit modules.

Every numerical failure mode raises a named subclass of HJKitError so
callers (and the scenario runner) can map failures to stable names.
"""


class HJKitError(Exception):
    """Base class for all hjkit errors."""


class DomainEscape(HJKitError):
    """A curve or trajectory left the working domain.

    Carries ``partial``: whatever portion of the result was computed
    before the escape (an ExtremalCurve, a truncated sheet, ...).
    """

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class BadCurve(HJKitError):
    """Curve parameter values are not strictly increasing."""


class DegenerateLagrangian(HJKitError):
    """Velocity Hessian determinant vanishes (to tolerance)."""


class InversionFailure(HJKitError):
    """Newton solve of p = dL/dqdot did not converge.

    Carries ``residual``: the last residual norm.
    """

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class BadParameterDirection(HJKitError):
    """Homogenized Lagrangian queried with non-positive parameter velocity."""


class BoundaryPoint(HJKitError):
    """Operation requires an interior parameter value."""


class CrossingNotFound(HJKitError):
    """A congruence curve failed to reach the target level set."""


class NotTangent(HJKitError):
    """Displacement is not tangent to the hypersurface."""


class NotEquidistantFamily(HJKitError):
    """The normalizing ratio is not constant on a level set."""


class StripFailure(HJKitError):
    """Initial strip conditions admit no solution near the seed."""


class OutOfSheet(HJKitError):
    """Query point lies outside the region covered by the sheet."""


class CausticSuspected(HJKitError):
    """Sheet Jacobian is (near-)singular at the query point."""


class NoConnection(HJKitError):
    """Two-point shooting failed to converge."""


class AmbiguousConnection(HJKitError):
    """Shooting found seed-dependent solutions (conjugate-point regime)."""


class RecoveryFailure(HJKitError):
    """Algebraic trajectory recovery from the two-point function failed."""


class ParaxialViolation(HJKitError):
    """Ray turned back along the preferred axis (velocity blow-up)."""


class SamplingTooCoarse(HJKitError):
    """Envelope construction found gaps at the given sampling density."""


class UnstableStep(HJKitError):
    """Propagator stability condition violated."""


class NodeOnPath(HJKitError):
    """Wave-function node encountered on the phase-unwrapping path.

    Carries ``where``: grid index of the offending cell.
    """

    def __init__(self, msg, where=None):
        super().__init__(msg)
        self.where = where


class NodeEncounter(HJKitError):
    """Guidance trajectory ran into a wave-function node.

    Carries ``t`` and ``q`` at the stop.
    """

    def __init__(self, msg, t=None, q=None):
        super().__init__(msg)
        self.t = t
        self.q = q


class StationaryFront(HJKitError):
    """Wave-front speed undefined: |grad S*| vanishes at the point."""


class ScenarioError(HJKitError):
    """Scenario file failed validation (unknown key, bad value, ...)."""

"""Exception hierarchy for the delone_rectify package.

Every domain failure raises a subclass of :class:`DeloneRectifyError`, so
callers (CLI, service) can distinguish bad inputs from genuine bugs.
"""


class DeloneRectifyError(Exception):
    """Base class for all domain errors raised by this package."""


# --- point sets ---------------------------------------------------------


class DimensionMismatch(DeloneRectifyError):
    pass


class PointOutsideWindow(DeloneRectifyError):
    pass


class DuplicatePoint(DeloneRectifyError):
    pass


class EmptySet(DeloneRectifyError):
    pass


class DegenerateWindow(DeloneRectifyError):
    pass


class BallOutsideWindow(DeloneRectifyError):
    pass


class WindowTooSmall(DeloneRectifyError):
    pass


# --- generators ----------------------------------------------------------


class InvalidSpec(DeloneRectifyError):
    pass


# --- matching ------------------------------------------------------------


class Infeasible(DeloneRectifyError):
    """No admissible matching exists, even at the window diameter."""


class EmptyCore(DeloneRectifyError):
    pass


# --- local maps and plans --------------------------------------------------


class PushRatioExceeded(DeloneRectifyError):
    pass


class StepTooLong(DeloneRectifyError):
    pass


class GeneralPositionUnreachable(DeloneRectifyError):
    """The separation scale fell below its floor without finding an
    admissible perturbation."""


class NonMonotone1D(DeloneRectifyError):
    pass


class TubeClearanceViolated(DeloneRectifyError):
    """Construction bug guard: a tube's verified clearance was not positive."""


class InverseRootFindFailed(DeloneRectifyError):
    """Construction bug guard: the radial solve of a ball-push inverse
    missed its tolerance."""


# --- rendering -------------------------------------------------------------


class UnsupportedDimension(DeloneRectifyError):
    pass

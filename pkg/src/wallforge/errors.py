"""Exception types raised by the solvers, fitters and certifier.

Class names double as the error names printed by the command-line tool.
"""


class WallforgeError(Exception):
    """Base class for every error raised by this package."""

    #: continuation stage at which the error occurred, if any
    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage is not None:
            return f"stage {self.stage}: {msg}"
        return msg


class InvalidParams(WallforgeError, ValueError):
    """Parameters violate alpha > 0, omega >= 0 (or are not finite)."""


class WrongRegime(WallforgeError):
    """Operation is not defined in the regime of the given parameters."""


class MaxIters(WallforgeError):
    """Newton iteration did not reach the residual tolerance."""


class PositivityLost(WallforgeError):
    """No damped step keeps the iterate inside the positive quadrant."""


class SingularJacobian(WallforgeError):
    """The Newton matrix could not be factorized."""


class NotACrossing(WallforgeError):
    """The profile never crosses the midpoint level (a+b)/2."""


class TailTooShort(WallforgeError):
    """The tail fit window holds too few usable nodes."""


class NonPositiveTail(WallforgeError):
    """Tail deviations from the equilibrium are not positive and decaying."""


class IncompatibleParams(WallforgeError):
    """Two profiles were computed for different parameters or grids."""

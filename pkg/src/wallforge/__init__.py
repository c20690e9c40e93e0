"""Domain walls of the Rabi-coupled two-component Gross-Pitaevskii system.

Solve 1D walls by damped Newton with continuation in the interval length,
certify their bounds, monotonicity, first integral, tail decay and
uniqueness, and check one-dimensional symmetry on a 2D strip.
"""
from .errors import (
    IncompatibleParams,
    InvalidParams,
    MaxIters,
    NonPositiveTail,
    NotACrossing,
    PositivityLost,
    SingularJacobian,
    TailTooShort,
    WallforgeError,
    WrongRegime,
)
from .grid1d import Grid, Profile
from .model import Equilibria, LinearData, Params, Regime, equilibria, linear_data
from .solver1d import ContinuationSchedule, SolveOptions, continue_in_R, solve_bvp
from .certifier import Certificate, CheckRecord, certify_wall
from .strip2d import StripGrid, relax_strip

__version__ = "0.1.0"

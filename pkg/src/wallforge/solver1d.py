"""Finite-interval domain-wall solver, continuation in R and Neumann relaxation.

Unknowns are stored interleaved, ``z = [u_1, v_1, u_2, v_2, ...]``, so the
Newton matrix (discrete Laplacian minus the 2x2 blocks of ``model.jacobian``)
is banded with two sub- and two super-diagonals and is factorized in O(n).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from . import model
from .errors import MaxIters, PositivityLost, SingularJacobian, WallforgeError, WrongRegime
from .grid1d import (
    Grid,
    Profile,
    constant_profile,
    first_derivative,
    resample,
    symmetry_center,
    trapezoid,
)
from .model import Equilibria, Params

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    max_newton_iters: int = 50
    residual_tol: float = 1e-10
    armijo: float = 1e-4
    initial_step: float = 1.0
    step_factor: float = 0.5
    min_step: float = 2.0 ** -20
    positivity_floor: float = 1e-8
    # pseudo-transient continuation (Neumann relaxation only)
    initial_pseudo_dt: float = 0.1
    max_pseudo_dt: float = 1e14

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be at least 1")


@dataclass(frozen=True)
class ContinuationSchedule:
    R_values: tuple
    target_h: float

    def __post_init__(self):
        values = tuple(float(r) for r in self.R_values)
        if not values:
            raise ValueError("continuation schedule needs at least one R")
        if values[0] <= 0 or any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"R values must be positive and strictly increasing: {values}")
        if not self.target_h > 0:
            raise ValueError("target_h must be positive")
        object.__setattr__(self, "R_values", values)

    def grids(self) -> list[Grid]:
        return [Grid.from_spacing(R, self.target_h) for R in self.R_values]


@dataclass(frozen=True)
class TraceLine:
    stage: int
    R: float
    iter: int
    residual: float
    step_length: float

    def __str__(self):
        return f"{self.stage} {self.R:.17g} {self.iter} {self.residual:.17g} {self.step_length:.17g}"


TRACE_HEADER = "stage R iter residual step_length"


# ---------------------------------------------------------------------------
# residuals and Newton matrices


def _interleave(u, v):
    z = np.empty(2 * u.size)
    z[0::2], z[1::2] = u, v
    return z


def _dirichlet_full(z, eq: Equilibria):
    u = np.concatenate(([eq.a], z[0::2], [eq.b]))
    v = np.concatenate(([eq.b], z[1::2], [eq.a]))
    return u, v


def _dirichlet_residual(p: Params, u, v, inv_h2):
    f1, f2 = model.rhs(p, u[1:-1], v[1:-1])
    ru = (u[:-2] - 2.0 * u[1:-1] + u[2:]) * inv_h2 - f1
    rv = (v[:-2] - 2.0 * v[1:-1] + v[2:]) * inv_h2 - f2
    return ru, rv


def _neumann_residual(p: Params, u, v, inv_h2):
    def lap(f):
        out = np.empty_like(f)
        out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
        # ghost node mirrored across each end: zero normal derivative
        out[0] = 2.0 * (f[1] - f[0])
        out[-1] = 2.0 * (f[-2] - f[-1])
        return out * inv_h2

    f1, f2 = model.rhs(p, u, v)
    return lap(u) - f1, lap(v) - f2


def _banded_matrix(p: Params, u, v, inv_h2, neumann=False, shift=0.0):
    """Banded storage (2, 2) of d(residual)/dz minus ``shift`` on the diagonal."""
    j11, j12, j22 = model.jacobian_entries(p, u, v)
    m = 2 * u.size
    ab = np.zeros((5, m))
    ab[0, 2:] = inv_h2
    ab[4, :-2] = inv_h2
    ab[2, 0::2] = -2.0 * inv_h2 - j11 - shift
    ab[2, 1::2] = -2.0 * inv_h2 - j22 - shift
    ab[1, 1::2] = -j12
    ab[3, 0::2] = -j12
    if neumann:
        ab[0, 2:4] = 2.0 * inv_h2
        ab[4, m - 4:m - 2] = 2.0 * inv_h2
    return ab


def _solve(ab, rhs_vec):
    try:
        dz = solve_banded((2, 2), ab, rhs_vec, check_finite=False)
    except (LinAlgError, ValueError) as err:
        raise SingularJacobian(str(err)) from err
    if not np.all(np.isfinite(dz)):
        raise SingularJacobian("Newton step is not finite")
    return dz


def residual(p: Params, prof: Profile) -> np.ndarray:
    """Discrete residual ``[u'' - F1 ; v'' - F2]`` at the interior nodes."""
    ru, rv = _dirichlet_residual(p, prof.u, prof.v, 1.0 / prof.grid.h ** 2)
    return np.concatenate((ru, rv))


def neumann_residual(p: Params, prof: Profile) -> np.ndarray:
    ru, rv = _neumann_residual(p, prof.u, prof.v, 1.0 / prof.grid.h ** 2)
    return np.concatenate((ru, rv))


def _sup(r) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


# ---------------------------------------------------------------------------
# guesses


def initial_guess(grid: Grid, eq: Equilibria, steepness: float) -> Profile:
    mid, half = eq.midpoint, 0.5 * (eq.b - eq.a)
    t = np.tanh(steepness * grid.x)
    u = mid + half * t
    v = mid - half * t
    u[0], v[0], u[-1], v[-1] = eq.a, eq.b, eq.b, eq.a
    return Profile(grid, u, v)


def default_steepness(p: Params) -> float:
    """Tail rate of the true solution, used as tanh steepness."""
    return model.decay_exponents(p)[0]


# ---------------------------------------------------------------------------
# Dirichlet problem


def damped_newton(
    res_fn: Callable[[np.ndarray], np.ndarray],
    step_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    z: np.ndarray,
    admissible: Callable[[np.ndarray], bool],
    opts: SolveOptions,
    record: Callable[[int, float, float], None],
):
    """Armijo-damped Newton iteration on a residual function.

    ``step_fn(z, r)`` returns the full Newton step. A trial step is kept when
    it is ``admissible`` and reduces ``|r|^2`` sufficiently; the step length is
    halved down to ``opts.min_step``. Returns the converged iterate.
    """
    r = res_fn(z)
    step = 0.0
    for it in range(opts.max_newton_iters + 1):
        res = _sup(r)
        record(it, res, step)
        if res <= opts.residual_tol:
            return z
        if it == opts.max_newton_iters:
            break
        dz = step_fn(z, r)
        phi0 = float(r @ r)
        t = opts.initial_step
        accepted = None
        fallback = None
        while t >= opts.min_step:
            z_try = z + t * dz
            if admissible(z_try):
                r_try = res_fn(z_try)
                if float(r_try @ r_try) <= (1.0 - 2.0 * opts.armijo * t) * phi0:
                    accepted = (z_try, r_try, t)
                    break
                fallback = (z_try, r_try, t)
            t *= opts.step_factor
        if accepted is None:
            if fallback is None:
                raise PositivityLost(
                    f"no step down to {opts.min_step:g} keeps the iterate positive "
                    f"(iteration {it}, residual {res:.3e})"
                )
            # no sufficient decrease: take the shortest admissible step and keep going
            accepted = fallback
        z, r, step = accepted
    raise MaxIters(
        f"residual {res:.3e} above tolerance {opts.residual_tol:g} "
        f"after {opts.max_newton_iters} Newton iterations"
    )


def lower_bound(eq: Equilibria, floor: float) -> float:
    # when a vanishes (omega = 0) the tail itself sits below any fixed floor
    return floor if eq.a >= floor else -floor


def solve_bvp(
    p: Params,
    grid: Grid,
    guess: Profile,
    opts: Optional[SolveOptions] = None,
    trace: Optional[list] = None,
    stage: int = 0,
) -> Profile:
    """Solve the Dirichlet problem on ``[-R, R]`` with data (a,b) at -R, (b,a) at +R.

    Parameters
    ----------
    p : Params
        Model parameters; omega/alpha must not exceed 1/2.
    grid : Grid
        Discretization; ``guess`` must live on it.
    guess : Profile
        Starting iterate. Its endpoint values are replaced by the Dirichlet data.
    opts : SolveOptions, optional
    trace : list, optional
        Receives one ``TraceLine`` per Newton iteration.
    stage : int
        Continuation stage index written to the trace.

    Returns
    -------
    Profile
        Solution with sup-norm residual at most ``opts.residual_tol``.
    """
    opts = opts or SolveOptions()
    eq = model.equilibria(p)
    if not eq.has_pair:
        raise WrongRegime(
            f"ConstantOnly regime (omega/alpha = {p.ratio:.6g} > 1/2): no domain wall exists"
        )
    if guess.grid != grid:
        raise ValueError("guess is not defined on the requested grid")
    if eq.a == eq.b:
        # omega/alpha = 1/2: both ends coincide and the constant state solves the problem
        sol = constant_profile(grid, eq.a, eq.b)
        if trace is not None:
            trace.append(TraceLine(stage, grid.R, 0, _sup(residual(p, sol)), 0.0))
        return sol

    inv_h2 = 1.0 / grid.h ** 2
    lower = lower_bound(eq, opts.positivity_floor)

    def res_fn(z):
        u, v = _dirichlet_full(z, eq)
        ru, rv = _dirichlet_residual(p, u, v, inv_h2)
        return _interleave(ru, rv)

    def step_fn(z, r):
        return _solve(_banded_matrix(p, z[0::2], z[1::2], inv_h2), -r)

    def admissible(z):
        return bool(np.all(np.isfinite(z)) and z.min() >= lower)

    def record(it, res, step):
        if trace is not None:
            trace.append(TraceLine(stage, grid.R, it, res, step))
        log.debug("stage %d R=%g iter %d residual %.3e step %g", stage, grid.R, it, res, step)

    z0 = _interleave(guess.u[1:-1], guess.v[1:-1])
    if not admissible(z0):
        raise PositivityLost("initial guess leaves the positive quadrant")
    z = damped_newton(res_fn, step_fn, z0, admissible, opts, record)
    u, v = _dirichlet_full(z, eq)
    return Profile(grid, u, v)


def continue_in_R(
    p: Params,
    sched: ContinuationSchedule,
    opts: Optional[SolveOptions] = None,
    steepness: Optional[float] = None,
    trace: Optional[list] = None,
) -> list[Profile]:
    """Solve on each interval of the schedule.

    Each stage is seeded with the previous solution, centered, resampled onto
    the larger grid and padded with the far-field equilibria.
    """
    opts = opts or SolveOptions()
    eq = model.equilibria(p)
    if not eq.has_pair or eq.a == eq.b:
        raise WrongRegime(
            f"ConstantOnly regime (omega/alpha = {p.ratio:.6g} >= 1/2): no domain wall exists"
        )
    k = steepness if steepness is not None else default_steepness(p)
    stages = []
    for i, grid in enumerate(sched.grids()):
        try:
            if not stages:
                guess = initial_guess(grid, eq, k)
            else:
                # center on u = v: the finite-R solution is symmetric about that
                # point, and moving the wall along the nearly flat translation
                # direction at large R is what Newton handles worst
                prev = stages[-1]
                guess = resample(
                    prev, grid, shift=symmetry_center(prev),
                    left=(eq.a, eq.b), right=(eq.b, eq.a),
                )
            stages.append(solve_bvp(p, grid, guess, opts, trace=trace, stage=i))
        except WallforgeError as err:
            err.stage = i
            raise
    return stages


def solve_on_grid(
    p: Params,
    grid: Grid,
    opts: Optional[SolveOptions] = None,
    trace: Optional[list] = None,
) -> Profile:
    """Domain wall on exactly ``grid``, reached by continuation through R/8, R/4, R/2."""
    opts = opts or SolveOptions()
    eq = model.equilibria(p)
    lam = default_steepness(p)
    coarse = [grid.R / 8, grid.R / 4, grid.R / 2]
    coarse = [R for R in coarse if R * lam >= 2.0 and R / grid.h >= 8]
    if coarse:
        stages = continue_in_R(p, ContinuationSchedule(tuple(coarse), grid.h), opts, trace=trace)
        prev = stages[-1]
        guess = resample(
            prev, grid, shift=symmetry_center(prev), left=(eq.a, eq.b), right=(eq.b, eq.a)
        )
    else:
        guess = initial_guess(grid, eq, lam)
    try:
        return solve_bvp(p, grid, guess, opts, trace=trace, stage=len(coarse))
    except WallforgeError as err:
        err.stage = len(coarse)
        raise


# ---------------------------------------------------------------------------
# Neumann relaxation


def relax_neumann(
    p: Params,
    grid: Grid,
    guess: Profile,
    opts: Optional[SolveOptions] = None,
    trace: Optional[list] = None,
) -> Profile:
    """Relax to a critical point with zero-flux ends.

    Pseudo-transient continuation: each step solves
    ``(J - I/dt) dz = -r``, which is an implicit gradient-flow step for small
    ``dt`` and a Newton step as ``dt`` grows. ``dt`` follows the switched
    evolution relaxation rule and is cut back when a step leaves the
    positive quadrant.
    """
    opts = opts or SolveOptions()
    inv_h2 = 1.0 / grid.h ** 2
    if guess.grid != grid:
        raise ValueError("guess is not defined on the requested grid")
    z = _interleave(guess.u, guess.v)
    if not z.min() > 0:
        raise PositivityLost("Neumann relaxation needs a strictly positive guess")

    def res_fn(z):
        ru, rv = _neumann_residual(p, z[0::2], z[1::2], inv_h2)
        return _interleave(ru, rv)

    r = res_fn(z)
    dt = opts.initial_pseudo_dt
    step = 0.0
    min_dt = opts.initial_pseudo_dt * opts.min_step
    for it in range(opts.max_newton_iters + 1):
        res = _sup(r)
        if trace is not None:
            trace.append(TraceLine(0, grid.R, it, res, step))
        if res <= opts.residual_tol:
            return Profile(grid, z[0::2], z[1::2])
        if it == opts.max_newton_iters:
            break
        while True:
            ab = _banded_matrix(p, z[0::2], z[1::2], inv_h2, neumann=True, shift=1.0 / dt)
            z_try = z + _solve(ab, -r)
            if np.all(np.isfinite(z_try)) and z_try.min() >= opts.positivity_floor:
                break
            dt *= opts.step_factor ** 2
            if dt < min_dt:
                raise PositivityLost(
                    f"pseudo time step fell below {min_dt:g} without keeping positivity"
                )
        r_new = res_fn(z_try)
        norm_old, norm_new = np.linalg.norm(r), np.linalg.norm(r_new)
        dt = min(dt * norm_old / max(norm_new, 1e-300), opts.max_pseudo_dt)
        z, r, step = z_try, r_new, dt
    raise MaxIters(
        f"Neumann relaxation residual {res:.3e} above {opts.residual_tol:g} "
        f"after {opts.max_newton_iters} iterations"
    )


# ---------------------------------------------------------------------------
# diagnostics on solved profiles


def hamiltonian_along(p: Params, prof: Profile) -> np.ndarray:
    du, dv = first_derivative(prof)
    return model.hamiltonian(p, prof.u, prof.v, du, dv)


def discrete_energy(p: Params, prof: Profile) -> float:
    du, dv = first_derivative(prof)
    return trapezoid(model.energy_density(p, prof.u, prof.v, du, dv), prof.grid)

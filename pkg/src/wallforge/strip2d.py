"""Domain walls on a 2D strip, periodic in x' and bounded in x_N.

The wall is placed across x_N with Dirichlet rows ``(a, b)`` at ``x_N = -R``
and ``(b, a)`` at ``x_N = R``. A perturbed copy of the 1D wall is relaxed by
damped Newton on the 5-point Laplacian; the result should again be
independent of x' and monotone in x_N.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import model
from .errors import SingularJacobian, WrongRegime
from .grid1d import Grid, Profile, recenter
from .model import Params
from .solver1d import SolveOptions, TraceLine, damped_newton, lower_bound, solve_on_grid

log = logging.getLogger(__name__)

MAX_RELATIVE_PERTURBATION = 0.1


@dataclass(frozen=True)
class StripGrid:
    """Nodes ``x'_j = j L'/n'`` (periodic) times the 1D grid in x_N.

    ``n_N`` counts interior rows; the two Dirichlet rows come on top.
    """

    L_prime: float
    R: float
    n_prime: int
    n_N: int

    def __post_init__(self):
        if not self.L_prime > 0:
            raise ValueError(f"period must be positive, got {self.L_prime}")
        if self.n_prime < 3:
            raise ValueError(f"need at least 3 periodic nodes, got {self.n_prime}")
        object.__setattr__(self, "L_prime", float(self.L_prime))
        object.__setattr__(self, "n_prime", int(self.n_prime))
        # validates R and n_N
        Grid(self.R, self.n_N)
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "n_N", int(self.n_N))

    @property
    def line(self) -> Grid:
        return Grid(self.R, self.n_N)

    @property
    def h_prime(self) -> float:
        return self.L_prime / self.n_prime

    @property
    def h_N(self) -> float:
        return self.line.h

    @property
    def xp(self) -> np.ndarray:
        return self.h_prime * np.arange(self.n_prime)

    @property
    def xN(self) -> np.ndarray:
        return self.line.x


@dataclass(frozen=True)
class StripField:
    """Field pair on a strip; arrays have shape ``(n_N + 2, n_prime)``, rows along x_N."""

    grid: StripGrid
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    iterations: int = 0
    residual: float = 0.0

    def column(self, j: int) -> Profile:
        return Profile(self.grid.line, self.u[:, j], self.v[:, j])

    def average(self) -> Profile:
        """Profile of the x'-averages."""
        return Profile(self.grid.line, self.u.mean(axis=1), self.v.mean(axis=1))


def extend(profile: Profile, grid: StripGrid) -> StripField:
    if profile.grid != grid.line:
        raise ValueError("profile grid does not match the strip's x_N grid")
    shape = (grid.line.n_nodes, grid.n_prime)
    u = np.broadcast_to(profile.u[:, None], shape).copy()
    v = np.broadcast_to(profile.v[:, None], shape).copy()
    return StripField(grid, u, v)


def _laplacian(grid: StripGrid) -> sp.csr_matrix:
    """5-point Laplacian on the interior rows, periodic in x', zero Dirichlet data."""
    n, m = grid.n_N, grid.n_prime
    ones = np.ones(n)
    t_n = sp.diags([ones[:-1], -2.0 * ones, ones[:-1]], [-1, 0, 1]) / grid.h_N ** 2
    c = sp.diags([np.ones(m - 1), -2.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]).tolil()
    c[0, m - 1] += 1.0
    c[m - 1, 0] += 1.0
    c_p = c.tocsr() / grid.h_prime ** 2
    return (sp.kron(t_n, sp.identity(m)) + sp.kron(sp.identity(n), c_p)).tocsr()


class _StripSystem:
    """Residual and Newton step on interleaved unknowns ``[u_0, v_0, u_1, v_1, ...]``.

    Node k is interior row ``k // n'`` and column ``k % n'``.
    """

    def __init__(self, p: Params, grid: StripGrid, eq: model.Equilibria):
        self.p, self.grid = p, grid
        self.shape = (grid.n_N, grid.n_prime)
        lap = _laplacian(grid)
        self.lap = lap
        self.lap2 = sp.kron(lap, sp.identity(2)).tocsr()
        # boundary rows enter the first and last interior rows
        n, m = self.shape
        inv = 1.0 / grid.h_N ** 2
        bu, bv = np.zeros(self.shape), np.zeros(self.shape)
        bu[0] += eq.a * inv
        bv[0] += eq.b * inv
        bu[n - 1] += eq.b * inv
        bv[n - 1] += eq.a * inv
        self.bu, self.bv = bu.ravel(), bv.ravel()

    def split(self, z):
        return z[0::2], z[1::2]

    def residual(self, z):
        u, v = self.split(z)
        f1, f2 = model.rhs(self.p, u, v)
        r = np.empty_like(z)
        r[0::2] = self.lap @ u + self.bu - f1
        r[1::2] = self.lap @ v + self.bv - f2
        return r

    def jacobian(self, z):
        u, v = self.split(z)
        j11, j12, j22 = model.jacobian_entries(self.p, u, v)
        k = u.size
        diag = np.empty(2 * k)
        diag[0::2], diag[1::2] = j11, j22
        off = np.zeros(2 * k - 1)
        off[0::2] = j12
        local = sp.diags([off, diag, off], [-1, 0, 1], format="csr")
        return (self.lap2 - local).tocsc()

    def step(self, z, r):
        try:
            lu = splu(self.jacobian(z))
        except RuntimeError as exc:
            raise SingularJacobian(f"strip Jacobian factorization failed: {exc}") from exc
        dz = lu.solve(-r)
        if not np.all(np.isfinite(dz)):
            raise SingularJacobian("strip Newton step is not finite")
        return dz


def relax_strip(
    p: Params,
    grid: StripGrid,
    perturbation_amplitude: float,
    seed: int,
    profile: Optional[Profile] = None,
    opts: Optional[SolveOptions] = None,
    trace: Optional[list] = None,
) -> StripField:
    """Relax a randomly perturbed 1D wall on the strip.

    ``profile`` is the 1D wall on ``grid.line``; it is computed when omitted.
    The perturbation is uniform on ``[-A, A]`` at every interior node, drawn
    from ``numpy.random.default_rng(seed)``, then clipped at the positivity
    floor. Newton stops at residual ``opts.residual_tol`` (default 1e-8).
    """
    if p.regime is not model.Regime.HETEROCLINIC:
        raise WrongRegime(f"strip relaxation needs the heteroclinic regime, got {p.regime.value}")
    opts = opts or SolveOptions(residual_tol=1e-8)
    eq = model.equilibria(p)
    if not 0 <= perturbation_amplitude <= MAX_RELATIVE_PERTURBATION * (eq.b - eq.a):
        raise ValueError(
            f"perturbation amplitude {perturbation_amplitude} outside "
            f"[0, {MAX_RELATIVE_PERTURBATION} (b - a)]"
        )
    if profile is None:
        profile = solve_on_grid(p, grid.line)

    base = extend(profile, grid)
    u0, v0 = base.u[1:-1].copy(), base.v[1:-1].copy()
    if perturbation_amplitude > 0:
        rng = np.random.default_rng(seed)
        u0 += rng.uniform(-perturbation_amplitude, perturbation_amplitude, u0.shape)
        v0 += rng.uniform(-perturbation_amplitude, perturbation_amplitude, v0.shape)
        np.clip(u0, opts.positivity_floor, None, out=u0)
        np.clip(v0, opts.positivity_floor, None, out=v0)

    system = _StripSystem(p, grid, eq)
    z = np.empty(2 * u0.size)
    z[0::2], z[1::2] = u0.ravel(), v0.ravel()
    lower = lower_bound(eq, opts.positivity_floor)
    history = []

    def record(it, res, t):
        history.append((it, res))
        if trace is not None:
            trace.append(TraceLine(0, grid.R, it, res, t))
        log.debug("strip iter %d residual %.3e step %.3g", it, res, t)

    z = damped_newton(
        system.residual, system.step, z, lambda w: bool(np.all(w > lower)), opts, record
    )
    u, v = base.u.copy(), base.v.copy()
    u[1:-1] = z[0::2].reshape(system.shape)
    v[1:-1] = z[1::2].reshape(system.shape)
    it, res = history[-1]
    return StripField(grid, u, v, iterations=it, residual=res)


@dataclass(frozen=True)
class StripReport:
    max_spread: float
    max_variance: float
    monotone: bool
    average_deviation: float

    def passed(self, spread_tol: float = 1e-6, average_tol: float = 1e-6) -> bool:
        return (
            self.max_spread <= spread_tol
            and self.monotone
            and self.average_deviation <= average_tol
        )

    def to_dict(self) -> dict:
        return {
            "max_spread": self.max_spread,
            "max_variance": self.max_variance,
            "monotone": self.monotone,
            "average_deviation": self.average_deviation,
        }


def analyze(p: Params, fld: StripField, profile: Profile) -> StripReport:
    """x'-uniformity, column monotonicity and agreement with the 1D wall."""
    eq = model.equilibria(p)
    spread = max(
        float(np.max(np.ptp(fld.u, axis=1))), float(np.max(np.ptp(fld.v, axis=1)))
    )
    variance = max(float(np.max(np.var(fld.u, axis=1))), float(np.max(np.var(fld.v, axis=1))))
    monotone = bool(np.all(np.diff(fld.u, axis=0) > 0) and np.all(np.diff(fld.v, axis=0) < 0))
    avg = recenter(fld.average(), eq)
    ref = recenter(profile, eq)
    deviation = max(float(np.max(np.abs(avg.u - ref.u))), float(np.max(np.abs(avg.v - ref.v))))
    return StripReport(spread, variance, monotone, deviation)


def to_csv(fld: StripField) -> str:
    buf = io.StringIO()
    buf.write("xp,xN,u,v\n")
    xp, xN = fld.grid.xp, fld.grid.xN
    for i, y in enumerate(xN):
        for j, x in enumerate(xp):
            buf.write(f"{x:.17g},{y:.17g},{fld.u[i, j]:.17g},{fld.v[i, j]:.17g}\n")
    return buf.getvalue()


def write_csv(fld: StripField, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(to_csv(fld))

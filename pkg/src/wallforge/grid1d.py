"""Uniform grids on [-R, R], node-aligned profiles and finite differences."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid as trapezoid_rule
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import NotACrossing
from .model import Equilibria


@dataclass(frozen=True)
class Grid:
    R: float
    n_interior: int

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"half length must be positive, got {self.R}")
        if self.n_interior < 3:
            raise ValueError(f"need at least 3 interior nodes, got {self.n_interior}")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "n_interior", int(self.n_interior))

    @classmethod
    def from_spacing(cls, R: float, h: float) -> "Grid":
        """Grid whose spacing is as close to ``h`` as an integer node count allows."""
        n_intervals = max(int(round(2.0 * R / h)), 4)
        return cls(R, n_intervals - 1)

    @property
    def n_nodes(self) -> int:
        return self.n_interior + 2

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.n_interior + 1)

    @property
    def x(self) -> np.ndarray:
        # symmetric construction: x[0] = -R, x[-1] = R and x[-1-i] = -x[i] exactly
        m = self.n_interior + 1
        i = np.arange(m + 1)
        return self.R * (2 * i - m) / m


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Profile:
    grid: Grid
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        u, v = _frozen(self.u), _frozen(self.v)
        n = self.grid.n_nodes
        if u.shape != (n,) or v.shape != (n,):
            raise ValueError(f"profile arrays must have length {n}, got {u.shape}, {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("profile contains non-finite values")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, u, v) -> "Profile":
        return Profile(self.grid, u, v)

    def swap_reflect(self) -> "Profile":
        """The profile ``(v(-x), u(-x))``, which solves the same Dirichlet problem."""
        return Profile(self.grid, self.v[::-1], self.u[::-1])

    def has_dirichlet_data(self, eq: Equilibria) -> bool:
        return (
            self.u[0] == eq.a and self.v[0] == eq.b
            and self.u[-1] == eq.b and self.v[-1] == eq.a
        )


def constant_profile(grid: Grid, u: float, v: float) -> Profile:
    return Profile(grid, np.full(grid.n_nodes, u), np.full(grid.n_nodes, v))


def second_derivative(prof: Profile) -> tuple[np.ndarray, np.ndarray]:
    """Central second differences at the interior nodes."""
    inv_h2 = 1.0 / prof.grid.h ** 2

    def d2(f):
        return (f[:-2] - 2.0 * f[1:-1] + f[2:]) * inv_h2

    return d2(prof.u), d2(prof.v)


def first_derivative(prof: Profile) -> tuple[np.ndarray, np.ndarray]:
    """Second-order first derivatives at every node (one-sided at the ends)."""
    h = prof.grid.h
    return (
        np.gradient(prof.u, h, edge_order=2),
        np.gradient(prof.v, h, edge_order=2),
    )


def trapezoid(values: np.ndarray, grid: Grid) -> float:
    return float(trapezoid_rule(values, dx=grid.h))


def level_crossing(x: np.ndarray, f: np.ndarray, level: float) -> float:
    """First upward crossing of ``level`` by the cubic interpolant of ``f``."""
    above = f >= level
    idx = np.flatnonzero(~above[:-1] & above[1:])
    if idx.size == 0 or np.all(f == level):
        raise NotACrossing(f"profile never crosses the level {level:.12g}")
    i = int(idx[0])
    if f[i + 1] == level:
        return float(x[i + 1])
    spline = CubicSpline(x, f)
    lo, hi = x[i], x[i + 1]
    # linear estimate first, then refine on the spline inside the bracketing cell
    guess = lo + (level - f[i]) * (hi - lo) / (f[i + 1] - f[i])
    if (spline(lo) - level) * (spline(hi) - level) > 0:
        return float(guess)
    return float(brentq(lambda t: spline(t) - level, lo, hi, xtol=1e-15, rtol=1e-15))


def find_crossing(prof: Profile, level: float) -> float:
    """Location where ``u`` crosses ``level``."""
    return level_crossing(prof.x, prof.u, level)


def symmetry_center(prof: Profile) -> float:
    """Location where ``u = v``; the center of a swap-reflection symmetric wall."""
    return level_crossing(prof.x, prof.u - prof.v, 0.0)


def resample(
    prof: Profile,
    grid: Grid,
    shift: float = 0.0,
    left: Optional[tuple[float, float]] = None,
    right: Optional[tuple[float, float]] = None,
) -> Profile:
    """Sample ``prof`` at ``x + shift`` on ``grid`` by cubic interpolation.

    Points falling outside the source interval take the constant values
    ``left`` / ``right`` (default: the source endpoint values). Endpoints of
    the result are set to ``left`` and ``right`` when those are given.
    """
    src_x = prof.x
    left = left if left is not None else (prof.u[0], prof.v[0])
    right = right if right is not None else (prof.u[-1], prof.v[-1])
    xs = grid.x + shift
    out = []
    for values, lv, rv in ((prof.u, left[0], right[0]), (prof.v, left[1], right[1])):
        spline = CubicSpline(src_x, values)
        f = spline(np.clip(xs, src_x[0], src_x[-1]))
        f = np.where(xs < src_x[0], lv, f)
        f = np.where(xs > src_x[-1], rv, f)
        f[0], f[-1] = lv, rv
        out.append(f)
    return Profile(grid, out[0], out[1])


def recenter(prof: Profile, eq: Equilibria) -> Profile:
    """Translate the profile so that ``u(0) = (a + b) / 2``.

    Raises ``NotACrossing`` for profiles that never reach the midpoint level,
    e.g. constant ones.
    """
    x0 = find_crossing(prof, eq.midpoint)
    return resample(prof, prof.grid, shift=x0, left=(eq.a, eq.b), right=(eq.b, eq.a))


def write_csv(prof: Profile, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(to_csv(prof))


def to_csv(prof: Profile) -> str:
    buf = io.StringIO()
    buf.write("x,u,v\n")
    for x, u, v in zip(prof.x, prof.u, prof.v):
        buf.write(f"{x:.17g},{u:.17g},{v:.17g}\n")
    return buf.getvalue()


def read_csv(path: str | os.PathLike) -> Profile:
    """Read a ``x,u,v`` profile; the grid is rebuilt from the node count and R."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "u", "v"]:
            raise ValueError(f"expected header x,u,v, got {header}")
        rows = np.array([[float(s) for s in row] for row in reader if row])
    if rows.ndim != 2 or rows.shape[0] < 5:
        raise ValueError("profile file holds too few nodes")
    x = rows[:, 0]
    R = float(x[-1])
    if not np.isclose(x[0], -R, rtol=0, atol=1e-12 * max(R, 1.0)):
        raise ValueError("profile nodes are not symmetric about 0")
    grid = Grid(R, rows.shape[0] - 2)
    if not np.allclose(x, grid.x, rtol=0, atol=1e-9 * grid.h):
        raise ValueError("profile nodes are not uniformly spaced")
    return Profile(grid, rows[:, 1], rows[:, 2])

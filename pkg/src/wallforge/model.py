"""Closed-form quantities of the Rabi-coupled two-component system.

The stationary real system is

    u'' = F1(u, v) = -u (1 - u^2 - v^2) - v (omega - alpha u v)
    v'' = F2(u, v) = -v (1 - u^2 - v^2) - u (omega - alpha u v)

which is the Euler-Lagrange equation of

    E = int 1/2 (u'^2 + v'^2) + W(u, v),
    W = 1/4 (1 - u^2 - v^2)^2 + alpha/2 (u v - omega/alpha)^2.

All functions here are pure and broadcast over numpy arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParams, WrongRegime


class Regime(enum.Enum):
    HETEROCLINIC = "Heteroclinic"
    OMEGA_ZERO = "OmegaZero"
    CONSTANT_ONLY = "ConstantOnly"


@dataclass(frozen=True)
class Params:
    """Physical parameters: ``1 + alpha`` is the intercomponent coupling,
    ``omega`` the Rabi frequency."""

    alpha: float
    omega: float

    def __post_init__(self):
        alpha, omega = float(self.alpha), float(self.omega)
        if not (math.isfinite(alpha) and math.isfinite(omega)):
            raise InvalidParams(f"non-finite parameters alpha={alpha}, omega={omega}")
        if alpha <= 0:
            raise InvalidParams(f"alpha must be positive, got {alpha}")
        if omega < 0:
            raise InvalidParams(f"omega must be nonnegative, got {omega}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "omega", omega)

    @property
    def ratio(self) -> float:
        return self.omega / self.alpha

    @property
    def regime(self) -> Regime:
        if self.ratio >= 0.5:
            return Regime.CONSTANT_ONLY
        if self.omega == 0:
            return Regime.OMEGA_ZERO
        return Regime.HETEROCLINIC


@dataclass(frozen=True)
class Equilibria:
    """Constant states in the positive quadrant.

    ``a`` and ``b`` are ``None`` when omega/alpha > 1/2 (no ordered pair exists).
    """

    a: Optional[float]
    b: Optional[float]
    c: float

    @property
    def has_pair(self) -> bool:
        return self.a is not None

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class LinearData:
    """Linearization at the far-field state (b, a).

    ``mu`` is ``None`` at omega = 0, where the eigenvector ratio has no
    parameter-independent limit.
    """

    a11: float
    a12: float
    a22: float
    lambda_minus: float
    lambda_plus: float
    mu: Optional[float]

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])


def equilibria(p: Params) -> Equilibria:
    c = math.sqrt((1.0 + p.omega) / (2.0 + p.alpha))
    r = p.ratio
    if r > 0.5:
        return Equilibria(None, None, c)
    if r == 0.5:
        # degenerate point: a = b = c = 1/sqrt(2)
        s = 0.0
    else:
        s = math.sqrt(1.0 - 4.0 * r * r)
    a = math.sqrt(0.5 * (1.0 - s))
    b = math.sqrt(0.5 * (1.0 + s))
    return Equilibria(a, b, c)


def rhs(p: Params, u, v):
    """Right-hand sides ``(F1, F2)``; broadcasts over arrays."""
    mass = 1.0 - u * u - v * v
    coupling = p.omega - p.alpha * u * v
    return -u * mass - v * coupling, -v * mass - u * coupling


def jacobian_entries(p: Params, u, v):
    """Entries ``(j11, j12, j22)`` of the symmetric matrix d(F1, F2)/d(u, v)."""
    ap1 = p.alpha + 1.0
    j11 = 3.0 * u * u + ap1 * v * v - 1.0
    j22 = 3.0 * v * v + ap1 * u * u - 1.0
    j12 = 2.0 * ap1 * u * v - p.omega
    return j11, j12, j22


def jacobian(p: Params, u: float, v: float) -> np.ndarray:
    j11, j12, j22 = jacobian_entries(p, u, v)
    return np.array([[j11, j12], [j12, j22]], dtype=float)


def potential(p: Params, u, v):
    return 0.25 * (1.0 - u * u - v * v) ** 2 + 0.5 * p.alpha * (u * v - p.ratio) ** 2


def hamiltonian(p: Params, u, v, du, dv):
    """First integral of the 1D system; zero along the heteroclinic."""
    return 0.5 * (du * du + dv * dv) - potential(p, u, v)


def energy_density(p: Params, u, v, du, dv):
    return 0.5 * (du * du + dv * dv) + potential(p, u, v)


def decay_exponents(p: Params) -> tuple[float, float]:
    """``(lambda_minus, lambda_plus)`` from the closed form; requires omega/alpha < 1/2."""
    alpha, omega = p.alpha, p.omega
    disc = math.sqrt((alpha - 2.0) ** 2 + 32.0 * omega * omega / alpha)
    lam_m = math.sqrt(0.5 * ((alpha + 2.0) - disc))
    lam_p = math.sqrt(0.5 * ((alpha + 2.0) + disc))
    return lam_m, lam_p


def eigen_ratio(p: Params) -> float:
    """Component ratio of the slow eigenvector ``(1, mu)`` of the linearization."""
    alpha, omega = p.alpha, p.omega
    num = 2.0 * omega * (alpha + 2.0)
    den = alpha * (
        (alpha - 2.0) * math.sqrt(1.0 - 4.0 * omega * omega / (alpha * alpha))
        + math.sqrt((alpha - 2.0) ** 2 + 32.0 * omega * omega / alpha)
    )
    return num / den


def linear_data(p: Params) -> LinearData:
    if p.regime is Regime.CONSTANT_ONLY:
        raise WrongRegime(
            f"linearization is degenerate for omega/alpha = {p.ratio} >= 1/2"
        )
    eq = equilibria(p)
    a, b = eq.a, eq.b
    a11 = 2.0 * b * b + p.alpha * a * a
    a22 = 2.0 * a * a + p.alpha * b * b
    a12 = -p.omega * (2.0 + p.alpha) / p.alpha
    lam_m, lam_p = decay_exponents(p)
    mu = eigen_ratio(p) if p.omega > 0 else None
    return LinearData(a11, a12, a22, lam_m, lam_p, mu)

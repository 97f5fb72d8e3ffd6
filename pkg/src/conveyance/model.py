"""Trapping-well model: dimensionless parameters, grids, and the analytic
bound states of the untilted well used as oracles by the numerical methods.

The well is V(x) = V0 [tanh^2((x - x0)/w) - 1]; a uniformly accelerated
frame adds the linear term m*a*x, tilting the potential by the slope m*a.
Everything is dimensionless with V0 = w = hbar = 1 by default, so a system
is specified by the mass m and the acceleration a alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy.special import eval_jacobi

from .errors import InvalidLevelError

__all__ = [
    "PhysicalParams",
    "Grid",
    "PotentialSpec",
    "well_potential",
    "tilted_potential",
    "metastable_slope_limit",
    "has_metastable_well",
    "bound_state_energies",
    "bound_state_count",
    "bound_state_wavefunction",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless model parameters (defaults V0 = w = hbar = 1).

    ``depth`` is the well depth V0; the paper's depth symbol z is
    identified with V0 since only V0 appears in the formulas.
    """

    mass: float = 1.0
    depth: float = 1.0
    width: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "depth", "width", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Grid:
    """Uniform 1D mesh: x_j = x_min + j*dx, j = 0 .. n_points-1."""

    x_min: float
    x_max: float
    dx: float
    n_points: int

    def __post_init__(self):
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        if self.n_points < 3:
            raise ValueError("grid needs at least 3 points")
        expected = round((self.x_max - self.x_min) / self.dx) + 1
        if expected != self.n_points:
            raise ValueError(
                f"inconsistent grid: n_points={self.n_points}, expected {expected}"
            )

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, dx: float) -> "Grid":
        n = round((x_max - x_min) / dx) + 1
        return cls(x_min, x_max, dx, n)

    @cached_property
    def points(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    def index_of(self, x: float) -> int:
        j = round((x - self.x_min) / self.dx)
        if not 0 <= j < self.n_points:
            raise ValueError(f"x={x} outside grid")
        return j


@dataclass(frozen=True)
class PotentialSpec:
    """A well plus the linear tilt m*a*x of the accelerated frame."""

    params: PhysicalParams
    acceleration: float = 0.0

    @property
    def slope(self) -> float:
        """The tilt m*a multiplying x."""
        return self.params.mass * self.acceleration

    def mirrored(self) -> "PotentialSpec":
        """Spec whose potential is this one evaluated at -x (the well is
        even, so only the tilt flips sign)."""
        return replace(self, acceleration=-self.acceleration)


def well_potential(params: PhysicalParams, x, x0: float = 0.0):
    """V0 [tanh^2((x - x0)/w) - 1]; in [-V0, 0), even about x0."""
    u = np.tanh((np.asarray(x, dtype=float) - x0) / params.width)
    return params.depth * (u * u - 1.0)


def tilted_potential(spec: PotentialSpec, x):
    """well_potential + m*a*x, exactly."""
    return well_potential(spec.params, x) + spec.slope * np.asarray(x, dtype=float)


def metastable_slope_limit(params: PhysicalParams) -> float:
    """Largest tilt m*a for which the tilted well keeps a local minimum.

    The well-force magnitude peaks at (2 V0/w) * max_t t(1-t^2)
    = (2 V0/w) * 2/(3 sqrt(3)) over t = tanh(u) in (0, 1).
    """
    return (2.0 * params.depth / params.width) * (2.0 / (3.0 * np.sqrt(3.0)))


def has_metastable_well(spec: PotentialSpec) -> bool:
    """True iff the tilted potential still has a local minimum."""
    if spec.acceleration < 0:
        raise ValueError("acceleration must be >= 0")
    return abs(spec.slope) < metastable_slope_limit(spec.params)


def bound_state_energies(params: PhysicalParams) -> np.ndarray:
    """Bound-state energies of the untilted well, strictly increasing.

    e_n = -(hbar^2 / 2 m w^2) (sqrt(2 m w^2 V0 / hbar^2 + 1/4) - (2n+1)/2)^2,
    for every n making the bracket positive.
    """
    m, v0, w, hbar = params.mass, params.depth, params.width, params.hbar
    scale = hbar**2 / (2.0 * m * w**2)
    s = np.sqrt(2.0 * m * w**2 * v0 / hbar**2 + 0.25)
    n = np.arange(int(np.ceil(s - 0.5)))
    bracket = s - (2 * n + 1) / 2.0
    return -scale * bracket[bracket > 0] ** 2


def bound_state_count(params: PhysicalParams) -> int:
    return len(bound_state_energies(params))


def bound_state_wavefunction(
    params: PhysicalParams, n: int, grid: Grid, x0: float = 0.0
) -> np.ndarray:
    """Analytic bound state n on the grid, unit norm.

    Psi_n ~ (1 - xi^2)^(alpha/2) P_n^(alpha,alpha)(xi) with
    xi = tanh((x - x0)/w) and alpha = sqrt(-2 m w^2 e_n / hbar^2).
    Sign convention: positive at the well center for even n, positive
    slope there for odd n.
    """
    energies = bound_state_energies(params)
    if not 0 <= n < len(energies):
        raise InvalidLevelError(
            f"level {n} out of range: well holds {len(energies)} bound state(s)"
        )
    m, w, hbar = params.mass, params.width, params.hbar
    alpha = np.sqrt(-2.0 * m * w**2 * energies[n] / hbar**2)
    xi = np.tanh((grid.points - x0) / w)
    psi = (1.0 - xi**2) ** (alpha / 2.0) * eval_jacobi(n, alpha, alpha, xi)
    psi /= np.sqrt(grid.dx * np.sum(psi**2))
    # parity of P_n fixes the sign at (or just right of) the center
    j0 = int(np.argmin(np.abs(grid.points - x0)))
    probe = psi[j0] if n % 2 == 0 else psi[min(j0 + 1, grid.n_points - 1)]
    if probe < 0:
        psi = -psi
    return psi

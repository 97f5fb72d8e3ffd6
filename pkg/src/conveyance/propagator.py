"""Crank-Nicolson propagation in the co-moving frame of the well.

The moving-frame Hamiltonian is p^2/2m + V_well(x) + m*xddot0(t)*x (the
x-independent -m*xdot0^2/2 term is a global phase and is dropped). Each
step solves the Cayley-form implicit tridiagonal system with the
potential evaluated at the step endpoints:

    (1 + i dt H_{n+1}/2 hbar) psi^{n+1} = (1 - i dt H_n/2 hbar) psi^n

which is exactly unitary for real potentials. A negative-imaginary
absorbing layer V_ab = -i v_ab ((x - edge -/+ w_ab)/w_ab)^2 emulates an
open boundary on either side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import GridMismatchError, NumericError
from .model import Grid, PhysicalParams, well_potential

__all__ = [
    "WaveFunction",
    "AbsorbingPotential",
    "TimeGrid",
    "UniformAcceleration",
    "Trajectory",
    "cn_step",
    "propagate_moving_frame",
    "survival_p",
    "survival_P_rest",
    "reflection_monitor",
]


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitudes on a grid; norm via the grid quadrature
    (trapezoidal rule with the hard-wall zeros just outside)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise GridMismatchError("values do not match the grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite amplitudes")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values / self.norm())

    def overlap(self, other: "WaveFunction") -> complex:
        if other.grid != self.grid:
            raise GridMismatchError("wavefunctions live on different grids")
        return complex(self.grid.dx * np.vdot(self.values, other.values))


@dataclass(frozen=True)
class AbsorbingPotential:
    """Quadratic negative-imaginary layer at the grid edge(s)."""

    strength: float
    width: float
    side: str = "left"  # "left" | "right" | "both"

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("absorber strength must be >= 0")
        if self.width <= 0:
            raise ValueError("absorber width must be positive")
        if self.side not in ("left", "right", "both"):
            raise ValueError("side must be left, right or both")

    def profile(self, grid: Grid) -> np.ndarray:
        if self.width >= grid.x_max - grid.x_min:
            raise ValueError("absorber wider than the domain")
        x = grid.points
        v = np.zeros(grid.n_points, dtype=complex)
        if self.side in ("left", "both"):
            inner = grid.x_min + self.width
            mask = x < inner
            v[mask] += -1j * self.strength * ((x[mask] - inner) / self.width) ** 2
        if self.side in ("right", "both"):
            inner = grid.x_max - self.width
            mask = x > inner
            v[mask] += -1j * self.strength * ((x[mask] - inner) / self.width) ** 2
        return v


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("need at least one step")

    @property
    def t_max(self) -> float:
        return self.dt * self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class UniformAcceleration:
    """Schedule x0(t) = a t^2 / 2 (constant-acceleration sweep)."""

    a: float

    def acceleration(self, t):
        return self.a * np.ones_like(np.asarray(t, dtype=float))

    def velocity(self, t):
        return self.a * np.asarray(t, dtype=float)

    def position(self, t):
        return 0.5 * self.a * np.asarray(t, dtype=float) ** 2


def cn_step(values, v_now, v_next, dt, mass, dx, hbar: float = 1.0) -> np.ndarray:
    """One Crank-Nicolson step; potentials may be complex (absorbers)."""
    n = values.shape[0]
    t_hop = hbar**2 / (2.0 * mass * dx**2)
    coef = 1j * dt / (2.0 * hbar)
    rhs = (1.0 - coef * (2.0 * t_hop + v_now)) * values
    rhs[:-1] += coef * t_hop * values[1:]
    rhs[1:] += coef * t_hop * values[:-1]
    ab = np.empty((3, n), dtype=complex)
    ab[0, 0] = 0.0
    ab[0, 1:] = -coef * t_hop
    ab[1] = 1.0 + coef * (2.0 * t_hop + v_next)
    ab[2, :-1] = -coef * t_hop
    ab[2, -1] = 0.0
    try:
        return solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded singularity
        raise NumericError(f"singular Crank-Nicolson system: {exc}") from exc


class Trajectory:
    """Per-step survival records plus strided wavefunction snapshots.

    Immutable after the propagation that builds it completes.
    """

    def __init__(self, grid, times, p, P, norm, edge_weight, snapshots, extras):
        self.grid = grid
        self.times = times
        self.p = p
        self.P = P
        self.norm = norm
        self.edge_weight = edge_weight
        self.snapshots = snapshots  # list of (t, values)
        self.extras = extras  # name -> |overlap|^2 series
        for arr in (times, p, P, norm, edge_weight):
            arr.flags.writeable = False

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 + 1e-9 * abs(t):
            raise ValueError(f"t={t} not on stored samples")
        return i

    def final_wavefunction(self) -> WaveFunction:
        return WaveFunction(self.grid, self.snapshots[-1][1])


def propagate_moving_frame(
    initial: WaveFunction,
    schedule,
    time_grid: TimeGrid,
    params: PhysicalParams,
    absorber: AbsorbingPotential | None = None,
    snapshot_stride: int = 100,
    edge_margin: int = 5,
    extra_references: dict[str, np.ndarray] | None = None,
    compute_P: bool = True,
) -> Trajectory:
    """Propagate Phi(t) under p^2/2m + V_well + m a(t) x (+ absorber).

    Records every step: p(t) = |<Phi(0)|Phi(t)>|^2, the rest-frame survival
    P(t) = |<Psi(0)| exp(i m v(t) x / hbar) |Phi(t)>|^2 with
    Psi(0) = exp(i m v(0) x / hbar) Phi(0), the norm, and the probability
    within ``edge_margin`` points of the boundaries. Snapshots of Phi are
    stored every ``snapshot_stride`` steps (and at the final step).
    """
    grid = initial.grid
    x = grid.points
    dx, hbar, mass = grid.dx, params.hbar, params.mass
    base = well_potential(params, x)
    if absorber is not None:
        base = base + absorber.profile(grid)
    mx = mass * x

    psi = initial.values.astype(complex)
    v0 = float(np.asarray(schedule.velocity(0.0)))
    psi_rest0 = np.exp(1j * mass * v0 * x / hbar) * psi
    ref_p = np.conj(psi) * dx
    ref_P = np.conj(psi_rest0) * dx
    extra_refs = {
        name: np.conj(vals) * dx for name, vals in (extra_references or {}).items()
    }

    n_rec = time_grid.n_steps + 1
    times = time_grid.times
    p = np.empty(n_rec)
    P = np.empty(n_rec)
    norm = np.empty(n_rec)
    edge = np.empty(n_rec)
    extras = {name: np.empty(n_rec) for name in extra_refs}
    snapshots = [(0.0, psi.copy())]

    sl_edge = np.r_[0:edge_margin, grid.n_points - edge_margin : grid.n_points]

    def record(i, t, vel):
        p[i] = abs(np.sum(ref_p * psi)) ** 2
        if not compute_P:
            P[i] = np.nan
        elif vel == 0.0:
            P[i] = abs(np.sum(ref_P * psi)) ** 2
        else:
            P[i] = abs(np.sum(ref_P * np.exp(1j * mass * vel * x / hbar) * psi)) ** 2
        norm[i] = np.sqrt(dx * np.sum(np.abs(psi) ** 2))
        edge[i] = dx * np.sum(np.abs(psi[sl_edge]) ** 2)
        for name, ref in extra_refs.items():
            extras[name][i] = abs(np.sum(ref * psi)) ** 2

    record(0, 0.0, v0)
    a_now = float(np.asarray(schedule.acceleration(0.0)))
    v_now = base + a_now * mx
    for k in range(time_grid.n_steps):
        t_next = times[k + 1]
        a_next = float(np.asarray(schedule.acceleration(t_next)))
        v_next = base + a_next * mx
        psi = cn_step(psi, v_now, v_next, time_grid.dt, mass, dx, hbar)
        record(k + 1, t_next, float(np.asarray(schedule.velocity(t_next))))
        if (k + 1) % snapshot_stride == 0 or k + 1 == time_grid.n_steps:
            snapshots.append((float(t_next), psi.copy()))
        v_now = v_next

    return Trajectory(grid, times, p, P, norm, edge, snapshots, extras)


def survival_p(traj: Trajectory, t: float) -> float:
    """|<Phi(0)|Phi(t)>|^2 at a stored sample time."""
    return float(traj.p[traj.index_of(t)])


def survival_P_rest(traj: Trajectory, t: float) -> float:
    """Rest-frame survival P(t) at a stored sample time."""
    return float(traj.P[traj.index_of(t)])


def reflection_monitor(traj: Trajectory, threshold: float = 1e-4):
    """First time boundary probability exceeds the threshold, or None."""
    hit = traj.edge_weight > threshold
    if not hit.any():
        return None
    return float(traj.times[np.argmax(hit)])

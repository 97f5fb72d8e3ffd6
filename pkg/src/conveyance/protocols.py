"""Conveyance schedules x0(t) carrying the well over a distance L in a
time tau, and the end-to-end survival experiments built on them.

Three standard schedules (smoothness exponent mu of x0 ~ t^mu at start):

  constant-velocity  x0 = c t, c = L/tau                      (mu = 1)
  cos                a(t) = a1 cos(w t),  w = pi/tau, a1 = w^2 L / 2   (mu = 2)
  sin                a(t) = a2 sin(2 w t), a2 = 2 pi L / tau^2         (mu = 3)

The cos/sin forms start and stop at rest, so the moving-frame and
rest-frame survivals agree at t = tau. The constant-velocity protocol
boosts the state at t=0 and de-boosts it at t=tau (the moving-frame state
is discontinuous there); both conventions p_plus / p_minus are recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, InvalidLevelError, NoMetastableWellError
from .model import Grid, PhysicalParams, PotentialSpec, metastable_slope_limit
from .propagator import (
    AbsorbingPotential,
    TimeGrid,
    Trajectory,
    WaveFunction,
    propagate_moving_frame,
)
from . import spectral

__all__ = [
    "Protocol",
    "ConveyanceResult",
    "PopulationSpectrogram",
    "DropEstimate",
    "TunnelingEstimate",
    "make_protocol",
    "custom_protocol",
    "time_grid_for",
    "run_conveyance",
    "run_constant_velocity",
    "multi_state_conveyance",
    "initial_drop_estimate",
    "adiabatic_tunneling_estimate",
    "population_spectrogram",
]


@dataclass(frozen=True)
class Protocol:
    """A conveyance schedule with exact endpoint constraints."""

    kind: str  # "constant_velocity" | "cos" | "sin" | "custom"
    length: float
    duration: float
    mu: int | None
    _spline: object = field(default=None, repr=False, compare=False)

    @property
    def omega(self) -> float:
        return np.pi / self.duration

    @property
    def coefficient(self) -> float:
        """c, a1 or a2 of the closed-form kinds."""
        if self.kind == "constant_velocity":
            return self.length / self.duration
        if self.kind == "cos":
            return self.omega**2 * self.length / 2.0
        if self.kind == "sin":
            return 2.0 * np.pi * self.length / self.duration**2
        raise ValueError("custom protocols have no closed-form coefficient")

    def _inside(self, t):
        t = np.asarray(t, dtype=float)
        return t, (t >= 0.0) & (t <= self.duration)

    def acceleration(self, t):
        t, inside = self._inside(t)
        if self.kind == "constant_velocity":
            out = np.zeros_like(t)
        elif self.kind == "cos":
            out = np.where(inside, self.coefficient * np.cos(self.omega * t), 0.0)
        elif self.kind == "sin":
            out = np.where(inside, self.coefficient * np.sin(2 * self.omega * t), 0.0)
        else:
            out = np.where(inside, self._spline(np.clip(t, 0, self.duration)), 0.0)
        return out if out.ndim else float(out)

    def velocity(self, t):
        t, inside = self._inside(t)
        if self.kind == "constant_velocity":
            out = np.where(inside, self.length / self.duration, 0.0)
        elif self.kind == "cos":
            w = self.omega
            out = np.where(inside, self.coefficient / w * np.sin(w * t), 0.0)
        elif self.kind == "sin":
            w = self.omega
            out = np.where(
                inside, self.coefficient / (2 * w) * (1.0 - np.cos(2 * w * t)), 0.0
            )
        else:
            v = self._spline.antiderivative()
            out = np.where(inside, v(np.clip(t, 0, self.duration)), 0.0)
        return out if out.ndim else float(out)

    def position(self, t):
        t, inside = self._inside(t)
        tc = np.clip(t, 0.0, self.duration)
        if self.kind == "constant_velocity":
            out = self.length / self.duration * tc
        elif self.kind == "cos":
            w = self.omega
            out = self.coefficient / w**2 * (1.0 - np.cos(w * tc))
        elif self.kind == "sin":
            w = self.omega
            out = self.coefficient / (2 * w) * (tc - np.sin(2 * w * tc) / (2 * w))
        else:
            out = self._spline.antiderivative(2)(tc)
        return out if out.ndim else float(out)


def make_protocol(kind: str, length: float, duration: float) -> Protocol:
    """One of the closed-form schedules; endpoints hold exactly."""
    if length <= 0 or duration <= 0:
        raise ValueError("length and duration must be positive")
    mu = {"constant_velocity": 1, "cos": 2, "sin": 3}.get(kind)
    if mu is None:
        raise ValueError(f"unknown protocol kind {kind!r}")
    return Protocol(kind=kind, length=length, duration=duration, mu=mu)


def custom_protocol(
    times, accelerations, length: float, duration: float, tol: float = 1e-6
) -> Protocol:
    """Sampled a(t) with cubic interpolation; endpoint constraints are
    checked, not enforced."""
    spline = CubicSpline(np.asarray(times, float), np.asarray(accelerations, float))
    proto = Protocol("custom", length, duration, mu=None, _spline=spline)
    violations = []
    x_end = proto.position(duration)
    if abs(x_end - length) > tol * max(1.0, abs(length)):
        violations.append(f"x0(tau) = {x_end:.6g}, expected {length}")
    if violations:
        raise ConfigError(violations)
    return proto


def time_grid_for(duration: float, dt: float) -> TimeGrid:
    """Time grid whose steps divide the duration exactly."""
    n = max(1, round(duration / dt))
    return TimeGrid(duration / n, n)


@dataclass(frozen=True)
class ConveyanceResult:
    protocol: Protocol
    level: int
    times: np.ndarray
    p: np.ndarray
    P: np.ndarray
    norm: np.ndarray
    trajectory: Trajectory
    p_plus: np.ndarray | None = None
    p_minus: np.ndarray | None = None

    @property
    def p_final(self) -> float:
        return float(self.p[-1])


def run_conveyance(
    protocol: Protocol,
    params: PhysicalParams,
    grid: Grid,
    dt: float = 0.1,
    absorber: AbsorbingPotential | None = None,
    level: int = 0,
    snapshot_stride: int = 100,
) -> ConveyanceResult:
    """Moving-frame propagation of bound state `level` through the schedule."""
    if protocol.kind == "constant_velocity":
        return run_constant_velocity(
            protocol, params, grid, dt=dt, level=level,
            snapshot_stride=snapshot_stride, absorber=absorber, extra_time=0.0,
        )
    psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0), level)
    tg = time_grid_for(protocol.duration, dt)
    traj = propagate_moving_frame(
        WaveFunction(grid, psi0), protocol, tg, params,
        absorber=absorber, snapshot_stride=snapshot_stride,
    )
    return ConveyanceResult(
        protocol=protocol, level=level, times=traj.times,
        p=traj.p, P=traj.P, norm=traj.norm, trajectory=traj,
    )


@dataclass(frozen=True)
class _ConstantVelocity:
    c: float

    def acceleration(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def velocity(self, t):
        return self.c * np.ones_like(np.asarray(t, dtype=float))


def run_constant_velocity(
    protocol: Protocol,
    params: PhysicalParams,
    grid: Grid,
    dt: float = 0.1,
    level: int = 0,
    extra_time: float | None = None,
    snapshot_stride: int = 100,
    absorber: AbsorbingPotential | None = None,
) -> ConveyanceResult:
    """Constant-velocity sweep with the boost bookkeeping of the sudden
    start and stop.

    The moving-frame initial state is Phi(0+) = exp(-i m c x / hbar) psi0;
    at t = tau the stopping boost exp(+i m c x / hbar) is applied and the
    run continues for ``extra_time`` under the rest frame. Records
    p_plus = |<Phi(0+)|Phi>|^2 and p_minus = |<psi0|Phi>|^2, and stitches
    p(t) = p_plus on [0, tau], p_minus after.
    """
    if protocol.kind != "constant_velocity":
        raise ValueError("expected a constant-velocity protocol")
    if extra_time is None:
        extra_time = 0.1 * protocol.duration
    c = protocol.length / protocol.duration
    x = grid.points
    mass, hbar = params.mass, params.hbar
    psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0), level)
    boost = np.exp(-1j * mass * c * x / hbar)
    phi0_plus = boost * psi0

    tg = time_grid_for(protocol.duration, dt)
    seg1 = propagate_moving_frame(
        WaveFunction(grid, phi0_plus), _ConstantVelocity(c), tg, params,
        absorber=absorber, snapshot_stride=snapshot_stride,
        extra_references={"p_minus": psi0},
    )
    times = seg1.times
    p_plus = seg1.p
    p_minus = seg1.extras["p_minus"]
    p = p_plus.copy()
    P = seg1.P
    norm = seg1.norm
    traj = seg1

    if extra_time > 0:
        psi_tau_plus = np.conj(boost) * seg1.snapshots[-1][1]
        n2 = max(1, round(extra_time / tg.dt))
        seg2 = propagate_moving_frame(
            WaveFunction(grid, psi_tau_plus), _ConstantVelocity(0.0),
            TimeGrid(tg.dt, n2), params,
            absorber=absorber, snapshot_stride=snapshot_stride,
            extra_references={"p_minus": psi0, "p_plus": phi0_plus},
        )
        times = np.r_[times, protocol.duration + seg2.times[1:]]
        p_plus = np.r_[p_plus, seg2.extras["p_plus"][1:]]
        pm2 = seg2.extras["p_minus"]
        p_minus = np.r_[p_minus[:-1], pm2]  # p_minus jumps at tau: keep tau+
        p = np.r_[p, pm2[1:]]
        P = np.r_[P, pm2[1:]]  # rest-frame survival after the stop
        norm = np.r_[norm, seg2.norm[1:]]
        traj = seg2

    return ConveyanceResult(
        protocol=protocol, level=level, times=times, p=p, P=P, norm=norm,
        trajectory=traj, p_plus=p_plus, p_minus=p_minus,
    )


def multi_state_conveyance(
    protocol: Protocol,
    params: PhysicalParams,
    grid: Grid,
    dt: float = 0.1,
    levels=(0, 1),
    absorber: AbsorbingPotential | None = None,
) -> dict[int, ConveyanceResult]:
    """Independent conveyance runs per bound level; p_k(t) per level.

    The selection ratio p_0(tau)/p_1(tau) quantifies how strongly the
    process washes out the excited state.
    """
    from .model import bound_state_count

    n_bound = bound_state_count(params)
    for k in levels:
        if not 0 <= k < n_bound:
            raise InvalidLevelError(f"level {k} out of range (well holds {n_bound})")
    return {
        k: run_conveyance(protocol, params, grid, dt=dt, level=k, absorber=absorber)
        for k in levels
    }


@dataclass(frozen=True)
class DropEstimate:
    value: float
    within_validity: bool  # False once the estimate exceeds 0.5


def initial_drop_estimate(params: PhysicalParams, alpha: float) -> DropEstimate:
    """Sudden-jump population drop alpha^2 / (8 beta) from the harmonic
    expansion of the well (beta = V0 / w^2); alpha is the slope jump m*a."""
    beta = params.depth / params.width**2
    value = alpha**2 / (8.0 * beta)
    return DropEstimate(value=float(value), within_validity=bool(value <= 0.5))


@dataclass(frozen=True)
class TunnelingEstimate:
    times: np.ndarray
    p_t: np.ndarray
    p_tau: float
    drop_initial: float
    drop_final: float


def adiabatic_tunneling_estimate(
    protocol: Protocol,
    gamma_rows,
    params: PhysicalParams,
    n_samples: int = 2001,
    variant: str = "weber",
) -> TunnelingEstimate:
    """p(tau) ~ (1 - d_ini) exp(-int Gamma(a(t)) dt) (1 - d_fin).

    ``gamma_rows`` is a semiclassics.gamma_table result (or anything with
    .acceleration / .gamma_airy / .gamma_weber rows); Gamma is interpolated
    on |a| (even in a). Accelerations outside the table or beyond the
    metastable limit are errors.
    """
    rows = [r for r in gamma_rows if r.error is None]
    if not rows:
        raise ValueError("gamma table holds no valid rows")
    a_tab = np.array([abs(r.acceleration) for r in rows])
    g_tab = np.array(
        [r.gamma_weber if variant == "weber" else r.gamma_airy for r in rows]
    )
    order = np.argsort(a_tab)
    a_tab, g_tab = a_tab[order], g_tab[order]

    times = np.linspace(0.0, protocol.duration, n_samples)
    a_t = np.abs(np.atleast_1d(protocol.acceleration(times)))
    a_limit = metastable_slope_limit(params) / params.mass
    if np.any(a_t >= a_limit):
        raise NoMetastableWellError(
            "schedule exceeds the metastable acceleration limit; Gamma undefined"
        )
    if a_t.max() > a_tab[-1] * (1.0 + 1e-12):
        raise ValueError(
            f"gamma table covers |a| <= {a_tab[-1]:.4g}, schedule reaches {a_t.max():.4g}"
        )
    gamma_t = np.interp(a_t, a_tab, g_tab)
    integral = np.concatenate(
        ([0.0], np.cumsum(0.5 * (gamma_t[1:] + gamma_t[:-1]) * np.diff(times)))
    )

    a0 = abs(float(np.asarray(protocol.acceleration(0.0))))
    a1 = abs(float(np.asarray(protocol.acceleration(protocol.duration))))
    d_ini = initial_drop_estimate(params, params.mass * a0).value
    d_fin = initial_drop_estimate(params, params.mass * a1).value
    p_t = (1.0 - d_ini) * np.exp(-integral)
    p_tau = float(p_t[-1] * (1.0 - d_fin))
    return TunnelingEstimate(
        times=times, p_t=p_t, p_tau=p_tau, drop_initial=d_ini, drop_final=d_fin
    )


@dataclass(frozen=True)
class PopulationSpectrogram:
    """Instantaneous-eigenbasis populations at sampled times."""

    times: np.ndarray
    energies: np.ndarray  # (n_times, k_max)
    weights: np.ndarray  # (n_times, k_max)


def population_spectrogram(
    result: ConveyanceResult,
    params: PhysicalParams,
    k_max: int = 40,
) -> PopulationSpectrogram:
    """Project stored snapshots onto the eigenbasis of the instantaneous
    moving-frame Hamiltonian H0 + m a(t) x.

    Diagonalizations are cached by the acceleration value rounded to
    1e-12 (symmetric schedules revisit the same slopes).
    """
    import scipy.linalg

    traj = result.trajectory
    grid = traj.grid
    sqrt_dx = np.sqrt(grid.dx)
    cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    t_hop = params.hbar**2 / (2.0 * params.mass * grid.dx**2)
    off = np.full(grid.n_points - 1, -t_hop)

    times, energies, weights = [], [], []
    for t, psi in traj.snapshots:
        a = round(float(np.asarray(result.protocol.acceleration(t))), 12)
        if a not in cache:
            spec = PotentialSpec(params, a)
            from .model import tilted_potential

            diag = tilted_potential(spec, grid.points) + 2.0 * t_hop
            vals, vecs = scipy.linalg.eigh_tridiagonal(
                diag, off, select="i", select_range=(0, k_max - 1)
            )
            cache[a] = (vals, vecs)
        vals, vecs = cache[a]
        amps = sqrt_dx * (vecs.T @ psi)
        times.append(t)
        energies.append(vals)
        weights.append(np.abs(amps) ** 2)
    return PopulationSpectrogram(
        times=np.array(times),
        energies=np.array(energies),
        weights=np.array(weights),
    )

"""Decay-rate pipelines and the cross-method comparison table.

Four independent estimates of the escape rate of the tilted well:

  relax   -- dephasing sum over the exact-diagonalization spectrum, pure
             exponential fit before the wave reaches the boundary
  absorb  -- Crank-Nicolson run with an absorbing layer, offset
             exponential fit p0 + A exp(-Gamma t)
  wkb     -- Airy and Weber connection-formula widths
  res     -- Siegert resonance state, Gamma = -2 Im E
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConveyanceError
from .model import Grid, PhysicalParams, PotentialSpec
from .propagator import (
    AbsorbingPotential,
    TimeGrid,
    UniformAcceleration,
    WaveFunction,
    propagate_moving_frame,
)
from . import semiclassics, spectral

__all__ = ["absorber_relaxation_rate", "MethodComparison", "compare_rates"]


def absorber_relaxation_rate(
    params: PhysicalParams,
    acceleration: float,
    grid: Grid,
    absorber: AbsorbingPotential,
    dt: float,
    t_max: float,
    fit_start_threshold: float = 0.3,
    fit_t_min: float | None = None,
):
    """Gamma_absorb: CN run from the a=0 ground state under the tilt, with
    the absorbing layer, fit to p0 + A exp(-Gamma t) after the transient.

    The window starts when -ln p first exceeds ``fit_start_threshold``
    (or at ``fit_t_min`` if that comes later) and runs to the end of the
    series. Returns (trajectory, DecayFit).
    """
    psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0))
    tg = TimeGrid(dt, max(1, round(t_max / dt)))
    traj = propagate_moving_frame(
        WaveFunction(grid, psi0),
        UniformAcceleration(acceleration),
        tg,
        params,
        absorber=absorber,
        snapshot_stride=10**9,
        compute_P=False,
    )
    started = -np.log(traj.p) > fit_start_threshold
    t_start = traj.times[np.argmax(started)] if started.any() else traj.times[0]
    if fit_t_min is not None:
        t_start = max(t_start, fit_t_min)
    fit = spectral.fit_exponential(
        traj.times, traj.p, window=(t_start, traj.times[-1]), offset=True
    )
    return traj, fit


@dataclass(frozen=True)
class MethodComparison:
    acceleration: float
    ma: float
    gamma_relax: float
    gamma_absorb: float
    gamma_airy: float
    gamma_weber: float
    gamma_res: float
    notes: str


def compare_rates(
    params: PhysicalParams,
    acceleration: float,
    relax_grid: Grid | None = None,
    relax_t_max: float = 60.0,
    absorb_grid: Grid | None = None,
    absorber: AbsorbingPotential | None = None,
    absorb_dt: float = 0.05,
    absorb_t_max: float = 150.0,
    resonance_grid: Grid | None = None,
    methods=("relax", "absorb", "wkb", "res"),
    paper_kappa: bool = False,
) -> MethodComparison:
    """One merged row of every requested method at a fixed acceleration.

    Failures of individual methods are recorded in ``notes`` and leave a
    NaN in their column; the row always completes.
    """
    from . import resonance as resonance_mod

    spec = PotentialSpec(params, acceleration)
    out = dict(
        gamma_relax=np.nan, gamma_absorb=np.nan,
        gamma_airy=np.nan, gamma_weber=np.nan, gamma_res=np.nan,
    )
    notes = []

    if "relax" in methods:
        try:
            grid = relax_grid or Grid.from_bounds(-200.0, 200.0, 0.1)
            _, _, fit, _ = spectral.relaxation_rate(
                params, acceleration, grid, t_max=relax_t_max
            )
            out["gamma_relax"] = fit.gamma
        except ConveyanceError as exc:
            notes.append(f"relax: {exc}")

    if "absorb" in methods:
        try:
            grid = absorb_grid or Grid.from_bounds(-100.0, 20.0, 0.1)
            ab = absorber or AbsorbingPotential(20.0, 10.0, "left")
            _, fit = absorber_relaxation_rate(
                params, acceleration, grid, ab, absorb_dt, absorb_t_max
            )
            out["gamma_absorb"] = fit.gamma
        except ConveyanceError as exc:
            notes.append(f"absorb: {exc}")

    if "wkb" in methods:
        try:
            mirrored = semiclassics.mirror_for_wkb(spec)
            lvl_a = semiclassics.quantize(mirrored, 0, "airy")
            out["gamma_airy"] = semiclassics.gamma_airy(lvl_a, params.hbar)
            lvl_w = semiclassics.quantize(mirrored, 0, "weber")
            out["gamma_weber"] = semiclassics.gamma_weber(
                lvl_w, params.hbar, paper_kappa=paper_kappa
            )
        except ConveyanceError as exc:
            notes.append(f"wkb: {exc}")

    if "res" in methods:
        try:
            grid = resonance_grid or Grid.from_bounds(-20.0, 20.0, 0.1)
            state = resonance_mod.solve_resonance(spec, grid)
            out["gamma_res"] = state.gamma
        except ConveyanceError as exc:
            notes.append(f"res: {exc}")

    return MethodComparison(
        acceleration=acceleration,
        ma=spec.slope,
        notes="; ".join(notes),
        **out,
    )

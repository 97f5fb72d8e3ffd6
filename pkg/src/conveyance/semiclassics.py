"""WKB machinery for the tilted well: turning points, action integrals,
Bohr-Sommerfeld quantization, and decay widths from the Airy and the
Weber (parabolic-cylinder) connection formulas.

Conventions follow the textbook barrier geometry with the outgoing side
on the right: the tilted well is mirrored (x -> -x) before analysis, so
the three turning points satisfy c < a < b with the well on [c, a] and
the barrier on [a, b]. Actions are

    X(E) = (1/hbar) int_c^a sqrt(2m(E - V)) dx        (well phase)
    S(E) = (1/hbar) int_a^b sqrt(2m(V - E)) dx        (barrier action)

Airy width:   Gamma_n = (hbar w / 2 pi) exp(-2 S).
Weber width:  Gamma_n = (2 hbar w / pi) (sqrt(1+k^2) - k)/(sqrt(1+k^2) + k)
with the quantization phase X - phi/2,
phi = arg Gamma(1/2 + i S/pi) - (S/pi) ln|S/pi| + S/pi.

The k in the Weber width defaults to exp(+S): the literal exp(-S) of the
connection-matrix convention sends Gamma to 2*hbar*w/pi instead of 0 for
opaque barriers, contradicting the Airy limit; exp(+S) restores
Gamma -> (hbar w/2 pi) exp(-2S) as S -> inf. The literal variant stays
available behind ``paper_kappa=True``.

Above the barrier top the connection problem is continued uniformly:
S goes negative through the parabolic-top form -pi (E - Etop) sqrt(m/|V''|)
and the well phase runs up to the barrier maximum. The Weber width stays
finite there; the Airy form blows up, which is exactly its known failure
near the top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import loggamma

from .errors import (
    LevelNotFoundError,
    NoMetastableWellError,
    NoTurningPointsError,
    NumericError,
)
from .model import PotentialSpec, has_metastable_well, tilted_potential

__all__ = [
    "TurningPoints",
    "ActionIntegrals",
    "SemiclassicalLevel",
    "GammaTableRow",
    "mirror_for_wkb",
    "stationary_points",
    "turning_points",
    "singular_endpoint_integral",
    "actions",
    "weber_phase",
    "quantize",
    "gamma_airy",
    "gamma_weber",
    "gamma_table",
]

_TOP_EXCLUSION = 1e-6  # refuse E this close to the barrier maximum


@dataclass(frozen=True)
class TurningPoints:
    c: float
    a: float
    b: float


@dataclass(frozen=True)
class ActionIntegrals:
    barrier: float  # S
    well_phase: float  # X
    dwell_phase_dE: float  # dX/dE


@dataclass(frozen=True)
class SemiclassicalLevel:
    n: int
    energy: float
    spacing: float  # hbar*omega = pi / d(phase)/dE
    barrier_action: float  # S at E_n (negative above the barrier top)
    phase_shift: float  # phi at E_n (0 for the Airy variant)
    variant: str


@dataclass(frozen=True)
class GammaTableRow:
    acceleration: float
    ma: float
    energy_airy: float
    gamma_airy: float
    energy_weber: float
    gamma_weber: float
    error: str | None = None


def mirror_for_wkb(spec: PotentialSpec) -> PotentialSpec:
    """Reflect x -> -x so the outgoing (downhill) side lies at x > 0."""
    if not has_metastable_well(spec):
        raise NoMetastableWellError(
            f"slope ma={spec.slope:.4g} leaves no metastable well"
        )
    return spec.mirrored()


def _require_mirrored(spec: PotentialSpec):
    if spec.slope >= 0:
        raise ValueError("expected a mirrored spec (negative slope); "
                         "call mirror_for_wkb first")


def stationary_points(spec: PotentialSpec) -> tuple[float, float]:
    """(x_well, x_top) of the mirrored tilted potential."""
    _require_mirrored(spec)
    p = spec.params
    ma = -spec.slope
    g = lambda t: (2.0 * p.depth / p.width) * t * (1.0 - t * t) - ma
    t_split = 1.0 / np.sqrt(3.0)
    t1 = brentq(g, 1e-15, t_split, xtol=1e-15)
    t2 = brentq(g, t_split, 1.0 - 1e-15, xtol=1e-15)
    return p.width * np.arctanh(t1), p.width * np.arctanh(t2)


def _well_window(spec: PotentialSpec):
    x_well, x_top = stationary_points(spec)
    v = lambda x: float(tilted_potential(spec, x))
    return x_well, x_top, v(x_well), v(x_top)


def _left_wall(spec: PotentialSpec, e: float, x_well: float) -> float:
    v = lambda x: float(tilted_potential(spec, x)) - e
    lo = x_well - spec.params.width
    while v(lo) < 0:
        lo -= spec.params.width
    return brentq(v, lo, x_well, xtol=1e-13)


def turning_points(spec: PotentialSpec, energy: float) -> TurningPoints:
    """The three classical turning points c < a < b of the mirrored well."""
    x_well, x_top, e_min, e_top = _well_window(spec)
    if not e_min < energy < e_top:
        raise NoTurningPointsError(
            f"E={energy:.6g} outside the metastable window ({e_min:.6g}, {e_top:.6g})"
        )
    if e_top - energy < _TOP_EXCLUSION:
        raise NoTurningPointsError(
            "E within 1e-6 of the barrier maximum; turning points coalesce"
        )
    v = lambda x: float(tilted_potential(spec, x)) - energy
    c = _left_wall(spec, energy, x_well)
    a = brentq(v, x_well, x_top, xtol=1e-13)
    hi = x_top + spec.params.width
    while v(hi) > 0:
        hi += spec.params.width
    b = brentq(v, x_top, hi, xtol=1e-13)
    return TurningPoints(c, a, b)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def singular_endpoint_integral(f, lo: float, hi: float, tol: float = 1e-9) -> float:
    """integral of f over [lo, hi] where f has inverse-square-root-type
    endpoint behaviour under f = sqrt(g), g vanishing linearly at the ends.

    Substitutes x = mid + half*sin(theta), which removes the endpoint
    singularities of the derivative, then applies Gauss-Legendre with node
    doubling until the relative change drops below ``tol``.
    """
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    prev = None
    n = 32
    while n <= 8192:
        u, w = _gauss_legendre(n)
        theta = 0.5 * np.pi * u
        val = 0.5 * np.pi * half * np.sum(w * np.cos(theta) * f(mid + half * np.sin(theta)))
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
            return float(val)
        prev = val
        n *= 2
    raise NumericError("endpoint quadrature did not converge", last=prev)


def _momentum(spec: PotentialSpec, e: float):
    m = spec.params.mass
    return lambda x: np.sqrt(np.maximum(2.0 * m * (e - tilted_potential(spec, x)), 0.0))


def _rho(spec: PotentialSpec, e: float):
    m = spec.params.mass
    return lambda x: np.sqrt(np.maximum(2.0 * m * (tilted_potential(spec, x) - e), 0.0))


def _well_phase(spec: PotentialSpec, e: float) -> float:
    """X(E), continued to E above the barrier top (upper limit x_top)."""
    x_well, x_top, e_min, e_top = _well_window(spec)
    if e <= e_min:
        raise NoTurningPointsError(f"E={e:.6g} at or below the well minimum")
    c = _left_wall(spec, e, x_well)
    if e < e_top:
        v = lambda x: float(tilted_potential(spec, x)) - e
        a = brentq(v, x_well, x_top, xtol=1e-13)
    else:
        a = x_top
    return singular_endpoint_integral(_momentum(spec, e), c, a) / spec.params.hbar


def _barrier_action(spec: PotentialSpec, e: float) -> float:
    """S(E); negative above the top via the parabolic continuation."""
    x_well, x_top, e_min, e_top = _well_window(spec)
    if e < e_top - _TOP_EXCLUSION:
        tp = turning_points(spec, e)
        return singular_endpoint_integral(_rho(spec, e), tp.a, tp.b) / spec.params.hbar
    h = 1e-5 * spec.params.width
    v = lambda x: float(tilted_potential(spec, x))
    curvature = abs(v(x_top + h) - 2.0 * v(x_top) + v(x_top - h)) / h**2
    return (
        -np.pi * (e - e_top) * np.sqrt(spec.params.mass / curvature) / spec.params.hbar
    )


def actions(spec: PotentialSpec, energy: float) -> ActionIntegrals:
    """Barrier action S, well phase X, and dX/dE at the given energy
    (below the barrier top; quantization handles the continuation)."""
    turning_points(spec, energy)  # validates the window
    x_phase = _well_phase(spec, energy)
    s = _barrier_action(spec, energy)
    de = 1e-6 * abs(energy)
    dx_de = (_well_phase(spec, energy + de) - _well_phase(spec, energy - de)) / (2 * de)
    return ActionIntegrals(barrier=s, well_phase=x_phase, dwell_phase_dE=dx_de)


def weber_phase(s: float) -> float:
    """phi(S) = arg Gamma(1/2 + i S/pi) - (S/pi) ln|S/pi| + S/pi."""
    y = s / np.pi
    if y == 0.0:
        return 0.0
    return float(loggamma(0.5 + 1j * y).imag - y * np.log(abs(y)) + y)


def quantize(
    spec: PotentialSpec,
    n: int = 0,
    variant: str = "airy",
    include_phase_derivative: bool = True,
) -> SemiclassicalLevel:
    """Solve the quantization condition for level n of the mirrored well.

    Airy: X(E) = (n + 1/2) pi. Weber: X(E) - phi(S(E))/2 = (n + 1/2) pi.
    The root search extends above the barrier top through the uniform
    continuation when no below-top root exists. ``include_phase_derivative``
    keeps dphi/dE inside the level-spacing derivative for the Weber
    variant.
    """
    if variant not in ("airy", "weber"):
        raise ValueError("variant must be 'airy' or 'weber'")
    _, _, e_min, e_top = _well_window(spec)
    target = (n + 0.5) * np.pi

    if variant == "airy":
        phase = lambda e: _well_phase(spec, e)
    else:
        phase = lambda e: _well_phase(spec, e) - 0.5 * weber_phase(_barrier_action(spec, e))

    f = lambda e: phase(e) - target
    lo = e_min + max(1e-9, 1e-9 * abs(e_min))
    hi = e_top - _TOP_EXCLUSION
    if f(lo) > 0:
        raise LevelNotFoundError(f"level {n} lies below the quantizable window")
    if f(hi) < 0:
        # continue above the top until the phase reaches the target
        span = e_top - e_min
        step = 0.05 * span
        lo, hi = hi, e_top + _TOP_EXCLUSION
        while f(hi) < 0:
            lo = hi
            hi += step
            if hi > e_top + 20.0 * span:
                raise LevelNotFoundError(
                    f"no {variant} level {n}: phase never reaches (n+1/2)pi"
                )
    energy = brentq(f, lo, hi, xtol=1e-12)

    de = 1e-6 * abs(energy)
    if variant == "weber" and not include_phase_derivative:
        dphase = (_well_phase(spec, energy + de) - _well_phase(spec, energy - de)) / (2 * de)
    else:
        dphase = (phase(energy + de) - phase(energy - de)) / (2 * de)
    spacing = np.pi / dphase * spec.params.hbar
    s = _barrier_action(spec, energy)
    phi = weber_phase(s) if variant == "weber" else 0.0
    return SemiclassicalLevel(
        n=n,
        energy=float(energy),
        spacing=float(spacing),
        barrier_action=float(s),
        phase_shift=float(phi),
        variant=variant,
    )


def gamma_airy(level: SemiclassicalLevel, hbar: float = 1.0) -> float:
    """Gamma = (hbar*omega / 2 pi) exp(-2S), as a rate (divided by hbar)."""
    return level.spacing * np.exp(-2.0 * level.barrier_action) / (2.0 * np.pi * hbar)


def gamma_weber(
    level: SemiclassicalLevel, hbar: float = 1.0, paper_kappa: bool = False
) -> float:
    """Gamma = (2 hbar*omega / pi) (sqrt(1+k^2)-k)/(sqrt(1+k^2)+k).

    k = exp(+S) by default (correct opaque-barrier limit); k = exp(-S)
    under ``paper_kappa`` reproduces the literal connection-matrix text.
    """
    s = -level.barrier_action if paper_kappa else level.barrier_action
    if s > 200.0:  # (sqrt(1+k^2)-k)/(sqrt(1+k^2)+k) -> 1/(2k)^2, avoids overflow
        ratio = 0.25 * np.exp(-2.0 * s)
    else:
        kappa = np.exp(s)
        ratio = 1.0 / (np.sqrt(1.0 + kappa**2) + kappa) ** 2
    return 2.0 * level.spacing * ratio / (np.pi * hbar)


def gamma_table(
    params,
    a_values,
    n: int = 0,
    paper_kappa: bool = False,
) -> list[GammaTableRow]:
    """Both decay-rate variants for the lowest level over an acceleration
    sweep; per-point failures are recorded and the table continues."""
    rows = []
    for a in np.asarray(a_values, dtype=float):
        spec = PotentialSpec(params, float(a))
        try:
            mirrored = mirror_for_wkb(spec)
            lvl_a = quantize(mirrored, n, "airy")
            lvl_w = quantize(mirrored, n, "weber")
            rows.append(
                GammaTableRow(
                    acceleration=float(a),
                    ma=spec.slope,
                    energy_airy=lvl_a.energy,
                    gamma_airy=gamma_airy(lvl_a, params.hbar),
                    energy_weber=lvl_w.energy,
                    gamma_weber=gamma_weber(lvl_w, params.hbar, paper_kappa),
                )
            )
        except (NoMetastableWellError, LevelNotFoundError, NoTurningPointsError, NumericError) as exc:
            rows.append(
                GammaTableRow(
                    acceleration=float(a),
                    ma=spec.slope,
                    energy_airy=np.nan,
                    gamma_airy=np.nan,
                    energy_weber=np.nan,
                    gamma_weber=np.nan,
                    error=str(exc),
                )
            )
    return rows

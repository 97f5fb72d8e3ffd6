"""Exact diagonalization on the grid: spectra vs acceleration, overlap
distributions, dephasing survival probabilities, and the decay-rate fits.

The discretized Hamiltonian is the real symmetric tridiagonal matrix with
diagonal V_j + 2 t_hop and off-diagonal -t_hop, t_hop = hbar^2/(2 m dx^2),
with hard walls (Phi = 0 just outside the grid). Grid inner products are
dx * sum(conj(u) v); with the wall zeros adjoined this is exactly the
trapezoidal rule, so eigenvector orthonormality and expansion completeness
hold to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import curve_fit

from .errors import (
    FitDomainError,
    GridMismatchError,
    NoResonanceError,
    NumericError,
)
from .model import Grid, PhysicalParams, PotentialSpec, tilted_potential

__all__ = [
    "DiscreteHamiltonian",
    "SpectralDecomposition",
    "OverlapCoefficients",
    "DecayFit",
    "LorentzFit",
    "build_hamiltonian",
    "diagonalize",
    "energy_diagram",
    "expansion_coefficients",
    "dephasing_survival",
    "double_sum_survival",
    "edge_weight_series",
    "first_reflection_time",
    "fit_exponential",
    "lorentzian_fit",
    "metastable_branch_energy",
    "relaxation_rate",
]


@dataclass(frozen=True)
class DiscreteHamiltonian:
    """Symmetric tridiagonal H: diagonal V_j + 2 t_hop, off-diagonal -t_hop."""

    grid: Grid
    diagonal: np.ndarray
    t_hop: float

    def __post_init__(self):
        self.diagonal.flags.writeable = False

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = self.diagonal * vec
        out[:-1] -= self.t_hop * vec[1:]
        out[1:] -= self.t_hop * vec[:-1]
        return out


@dataclass(frozen=True)
class SpectralDecomposition:
    """Full spectrum, ascending; eigenvectors are l2-unit matrix columns."""

    grid: Grid
    energies: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.energies.flags.writeable = False
        self.vectors.flags.writeable = False

    def wavefunction(self, k: int) -> np.ndarray:
        """Eigenstate k with physical (grid quadrature) normalization."""
        return self.vectors[:, k] / np.sqrt(self.grid.dx)


@dataclass(frozen=True)
class OverlapCoefficients:
    """Amplitudes d_k = <k|state> on a decomposition's eigenbasis."""

    energies: np.ndarray
    amplitudes: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DecayFit:
    """Exponential relaxation fit p ~ offset + amplitude * exp(-gamma t)."""

    gamma: float
    amplitude: float | None
    offset: float | None
    window: tuple[float, float]
    residual: float
    r_squared: float


@dataclass(frozen=True)
class LorentzFit:
    """Least-squares Lorentzian c / ((E - center)^2 + width^2)."""

    center: float
    width: float
    scale: float
    residual: float


def build_hamiltonian(grid: Grid, spec: PotentialSpec) -> DiscreteHamiltonian:
    p = spec.params
    t_hop = p.hbar**2 / (2.0 * p.mass * grid.dx**2)
    diag = tilted_potential(spec, grid.points) + 2.0 * t_hop
    return DiscreteHamiltonian(grid, diag, t_hop)


def diagonalize(h: DiscreteHamiltonian) -> SpectralDecomposition:
    """Full spectrum of the tridiagonal H (LAPACK symmetric solver)."""
    off = np.full(h.grid.n_points - 1, -h.t_hop)
    try:
        energies, vectors = scipy.linalg.eigh_tridiagonal(h.diagonal, off)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"tridiagonal eigensolver failed: {exc}") from exc
    return SpectralDecomposition(h.grid, energies, vectors)


def ground_state(grid: Grid, spec: PotentialSpec, level: int = 0) -> np.ndarray:
    """Discrete eigenstate `level` with physical normalization (the exact
    stationary state of the grid Hamiltonian, preferred over the analytic
    wavefunction as the initial state of propagation runs)."""
    h = build_hamiltonian(grid, spec)
    off = np.full(grid.n_points - 1, -h.t_hop)
    _, vec = scipy.linalg.eigh_tridiagonal(
        h.diagonal, off, select="i", select_range=(level, level)
    )
    psi = vec[:, 0] / np.sqrt(grid.dx)
    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    return psi


def energy_diagram(
    params: PhysicalParams, a_values, grid: Grid, k_max: int
) -> np.ndarray:
    """Lowest k_max eigenvalues per acceleration; shape (len(a), k_max)."""
    a_values = np.asarray(a_values, dtype=float)
    if a_values.ndim != 1:
        raise ValueError("a_values must be one-dimensional")
    rows = np.empty((a_values.size, k_max))
    for i, a in enumerate(a_values):
        h = build_hamiltonian(grid, PotentialSpec(params, a))
        off = np.full(grid.n_points - 1, -h.t_hop)
        vals = scipy.linalg.eigh_tridiagonal(
            h.diagonal, off, select="i", select_range=(0, k_max - 1), eigvals_only=True
        )
        rows[i] = vals
    return rows


def expansion_coefficients(
    state: np.ndarray, decomp: SpectralDecomposition
) -> OverlapCoefficients:
    """d_k = <k|state> in the grid inner product (state physically normalized)."""
    if state.shape != (decomp.grid.n_points,):
        raise GridMismatchError(
            f"state has {state.shape[0]} points, decomposition {decomp.grid.n_points}"
        )
    amps = np.sqrt(decomp.grid.dx) * (decomp.vectors.T @ state)
    return OverlapCoefficients(decomp.energies, amps)


def dephasing_survival(
    coeffs: OverlapCoefficients, times, hbar: float = 1.0
) -> np.ndarray:
    """p(t) = |sum_k |d_k|^2 exp(-i E_k t / hbar)|^2."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    amp = np.exp(-1j * np.outer(times, coeffs.energies) / hbar) @ coeffs.weights
    return np.abs(amp) ** 2


def double_sum_survival(
    coeffs: OverlapCoefficients, times, hbar: float = 1.0
) -> np.ndarray:
    """The same survival written as sum |d|^4 + 2 sum_{k<k'} |d|^2|d'|^2 cos.

    O(N^2) per time; used as the algebraic cross-check of the coherent sum.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    w = coeffs.weights
    e = coeffs.energies
    out = np.empty(times.size)
    gaps = e[:, None] - e[None, :]
    ww = np.outer(w, w)
    for i, t in enumerate(times):
        out[i] = np.sum(ww * np.cos(gaps * t / hbar))
    return out


def edge_weight_series(
    decomp: SpectralDecomposition,
    coeffs: OverlapCoefficients,
    times,
    n_edge: int = 5,
    hbar: float = 1.0,
) -> np.ndarray:
    """Probability within n_edge points of either boundary vs time."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = decomp.grid.n_points
    rows = np.r_[0:n_edge, n - n_edge : n]
    src = decomp.vectors[rows, :] * coeffs.amplitudes
    amp = src @ np.exp(-1j * np.outer(decomp.energies, times) / hbar)
    return np.sum(np.abs(amp) ** 2, axis=0)


def first_reflection_time(times, edge_weight, threshold: float = 1e-4):
    """First time the boundary weight exceeds the threshold, or None."""
    hit = np.asarray(edge_weight) > threshold
    if not hit.any():
        return None
    return float(np.asarray(times)[np.argmax(hit)])


def _fit_window_mask(times, values, window):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        mask = np.ones(times.size, dtype=bool)
    else:
        lo, hi = window
        mask = (times >= lo) & (times <= hi)
    if mask.sum() < 3:
        raise FitDomainError("fit window holds fewer than 3 samples")
    return times[mask], values[mask]


def fit_exponential(times, values, window=None, offset: bool = False) -> DecayFit:
    """Fit exp(-gamma t) decay over the window.

    Pure form (offset=False): linear least squares on log p.
    Offset form: p0 + A exp(-gamma t) by nonlinear least squares seeded
    from the linear fit.
    """
    tt, pp = _fit_window_mask(times, values, window)
    if np.any(pp <= 0):
        raise FitDomainError("non-positive survival values inside the fit window")
    slope, icpt = np.polyfit(tt, np.log(pp), 1)
    log_resid = np.log(pp) - (slope * tt + icpt)
    ss_tot = np.sum((np.log(pp) - np.mean(np.log(pp))) ** 2)
    r2 = 1.0 - np.sum(log_resid**2) / ss_tot if ss_tot > 0 else 1.0
    if not offset:
        return DecayFit(
            gamma=-slope,
            amplitude=float(np.exp(icpt)),
            offset=None,
            window=(tt[0], tt[-1]),
            residual=float(np.sqrt(np.mean(log_resid**2))),
            r_squared=float(r2),
        )

    def model(t, p0, a, g):
        return p0 + a * np.exp(-g * t)

    try:
        popt, _ = curve_fit(
            model, tt, pp, p0=[0.0, np.exp(icpt), -slope], maxfev=20000
        )
    except RuntimeError as exc:
        raise NumericError(f"offset-exponential fit failed: {exc}") from exc
    p0, a, g = popt
    resid = pp - model(tt, *popt)
    ss_tot = np.sum((pp - np.mean(pp)) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(
        gamma=float(g),
        amplitude=float(a),
        offset=float(p0),
        window=(tt[0], tt[-1]),
        residual=float(np.sqrt(np.mean(resid**2))),
        r_squared=float(r2),
    )


def lorentzian_fit(energies, weights, half_window: float | None = None) -> LorentzFit:
    """Fit |d_k|^2 vs E_k to c / ((E - E0)^2 + G^2) around the peak."""
    e = np.asarray(energies, dtype=float)
    w = np.asarray(weights, dtype=float)
    k0 = int(np.argmax(w))
    if w[k0] <= 0:
        raise NoResonanceError("distribution has no positive peak")
    if half_window is not None:
        mask = np.abs(e - e[k0]) <= half_window
        e, w = e[mask], w[mask]
        k0 = int(np.argmax(w))
    if e.size < 5:
        raise NoResonanceError("fewer than 5 levels around the peak")
    # seed the width from the half-maximum crossing
    above = w >= 0.5 * w[k0]
    width0 = max((e[above][-1] - e[above][0]) / 2.0, np.min(np.diff(np.sort(e))))

    def model(x, c, e0, g):
        return c / ((x - e0) ** 2 + g**2)

    try:
        popt, _ = curve_fit(
            model, e, w, p0=[w[k0] * width0**2, e[k0], width0], maxfev=20000
        )
    except RuntimeError as exc:
        raise NoResonanceError(f"Lorentzian fit failed: {exc}") from exc
    c, e0, g = popt
    resid = w - model(e, *popt)
    return LorentzFit(
        center=float(e0),
        width=float(abs(g)),
        scale=float(c),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


def metastable_branch_energy(
    params: PhysicalParams, a: float, grid: Grid
) -> tuple[float, OverlapCoefficients]:
    """Energy of the metastable branch at acceleration a: the eigenvalue
    carrying the largest overlap with the a=0 ground state."""
    psi0 = ground_state(grid, PotentialSpec(params, 0.0))
    decomp = diagonalize(build_hamiltonian(grid, PotentialSpec(params, a)))
    coeffs = expansion_coefficients(psi0, decomp)
    k = int(np.argmax(coeffs.weights))
    return float(decomp.energies[k]), coeffs


def relaxation_rate(
    params: PhysicalParams,
    a: float,
    grid: Grid,
    t_max: float = 60.0,
    n_times: int = 1201,
    start_threshold: float = 0.1,
    reflection_threshold: float = 1e-4,
):
    """Full dephasing pipeline for Gamma_relax at fixed acceleration.

    Expands the a=0 ground state on the tilted spectrum, forms p(t), picks
    the fit window (start where -ln p first exceeds ``start_threshold``,
    end before the wave reaches the boundary), and fits the pure
    exponential. Returns (times, p, DecayFit, coefficients).
    """
    psi0 = ground_state(grid, PotentialSpec(params, 0.0))
    decomp = diagonalize(build_hamiltonian(grid, PotentialSpec(params, a)))
    coeffs = expansion_coefficients(psi0, decomp)
    times = np.linspace(0.0, t_max, n_times)
    p = dephasing_survival(coeffs, times, params.hbar)
    edge = edge_weight_series(decomp, coeffs, times, hbar=params.hbar)
    edge_prob = edge * grid.dx
    t_refl = first_reflection_time(times, edge_prob, reflection_threshold)
    t_end = times[-1] if t_refl is None else t_refl
    started = -np.log(p) > start_threshold
    if not started.any():
        raise FitDomainError("survival never left the transient regime")
    t_start = times[np.argmax(started)]
    if t_start >= t_end:
        raise FitDomainError("reflection precedes the end of the transient")
    fit = fit_exponential(times, p, window=(t_start, t_end))
    return times, p, fit, coeffs

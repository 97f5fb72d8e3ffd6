"""Siegert resonance states of the tilted well on the lattice.

The discretized Schrodinger equation outside the grid has the pure linear
potential V_j = (m a dx) j, which turns the three-term recurrence into the
Bessel recurrence of order nu_j = j + sigma(1 - E / 2 t_hop) at fixed
argument sigma = 2 t_hop / (m a dx). Closing the interior problem with
energy-dependent effective boundary potentials

    V_eff = -t_hop * (Phi_exterior at boundary+1) / (Phi_exterior at boundary)

encodes a decaying exterior on the uphill side (Bessel J, the minimal
solution, evaluated by backward continued fraction) and an outgoing wave
on the downhill side (Hankel H1 of complex order). The complex eigenvalue
then solves the self-consistency e_k(E) = E; its imaginary part gives the
decay rate Gamma = -2 Im E.

H1 ratios of large complex order are built without special-function
libraries: the two Bessel solutions F_j = J_{nu_j}(sigma) and
G_j = (-1)^j J_{-nu_j}(sigma) are each propagated from a Debye-expansion
anchor deep in their evanescent regions (where the expansion is accurate
to ~1e-12) through the exact recurrence, and combined via

    H1_j = (G_j - e^{-i pi varsigma} F_j) / (i sin(pi varsigma)),

with varsigma = sigma(1 - E / 2 t_hop). The cross-product Wronskian
F_j G_{j+1} - F_{j+1} G_j = 2 sin(pi varsigma)/(pi sigma) is verified on
every evaluation as a built-in correctness check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig, solve_banded
from scipy.optimize import minimize

from .errors import NoMetastableWellError, NumericError
from .model import Grid, PotentialSpec, tilted_potential
from . import semiclassics, spectral

__all__ = [
    "ExteriorClosure",
    "ResonanceState",
    "nu_sigma",
    "right_closure",
    "left_closure",
    "hankel1_ratio",
    "interior_matrix",
    "nearest_eigenpair",
    "interior_eigensolve",
    "interior_spectrum",
    "solve_resonance",
]

# Debye expansion polynomials u_k(t), ascending powers of t = coth(alpha)
# (generated from the standard recurrence
#  u_{k+1} = t^2(1-t^2)/2 u_k' + (1/8) int_0^t (1-5s^2) u_k ds).
_DEBYE_U = [
    [(1, 1)],
    [(0, 1), (1, 8), (0, 1), (-5, 24)],
    [(0, 1), (0, 1), (9, 128), (0, 1), (-77, 192), (0, 1), (385, 1152)],
    [(0, 1), (0, 1), (0, 1), (75, 1024), (0, 1), (-4563, 5120), (0, 1),
     (17017, 9216), (0, 1), (-85085, 82944)],
    [(0, 1), (0, 1), (0, 1), (0, 1), (3675, 32768), (0, 1), (-96833, 40960),
     (0, 1), (144001, 16384), (0, 1), (-7436429, 663552), (0, 1),
     (37182145, 7962624)],
    [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (59535, 262144), (0, 1),
     (-67608983, 9175040), (0, 1), (250881631, 5898240), (0, 1),
     (-108313205, 1179648), (0, 1), (5391411025, 63700992), (0, 1),
     (-5391411025, 191102976)],
    [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (2401245, 4194304),
     (0, 1), (-388895895, 14680064), (0, 1), (1441372804469, 6606028800),
     (0, 1), (-33010308331, 47185920), (0, 1), (4445922195, 4194304), (0, 1),
     (-1169936192425, 1528823808), (0, 1), (5849680962125, 27518828544)],
    [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1),
     (57972915, 33554432), (0, 1), (-25388505925, 234881024), (0, 1),
     (1007390378503, 838860800), (0, 1), (-1602251736839, 301989888), (0, 1),
     (10559432785187, 905969664), (0, 1), (-36927006432745, 2717908992),
     (0, 1), (1774793203908725, 220150628352), (0, 1),
     (-1267709431363375, 660451885056)],
    [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1),
     (13043905875, 2147483648), (0, 1), (-928090660435, 1879048192), (0, 1),
     (667955999804539, 93952409600), (0, 1), (-276439228010667, 6710886400),
     (0, 1), (3542717254441859, 28991029248), (0, 1),
     (-39803268297948155, 195689447424), (0, 1),
     (75358832548684685, 391378894848), (0, 1),
     (-512408152157076175, 5283615080448), (0, 1),
     (2562040760785380875, 126806761930752)],
]
_DEBYE_POLY = [np.array([p / q for p, q in row])[::-1] for row in _DEBYE_U]


@dataclass(frozen=True)
class ExteriorClosure:
    """Boundary ratio of the exterior solution and the derived V_eff."""

    side: str  # "L" or "R"
    ratio: complex  # Phi_{boundary+1} / Phi_{boundary} (outward neighbour)
    t_hop: float

    @property
    def v_eff(self) -> complex:
        return -self.t_hop * self.ratio


@dataclass(frozen=True)
class ResonanceState:
    energy: complex
    vector: np.ndarray
    residual: float
    iterations: int
    method: str

    @property
    def gamma(self) -> float:
        return -2.0 * self.energy.imag


def _lattice_scales(spec: PotentialSpec, grid: Grid):
    p = spec.params
    if spec.acceleration == 0.0:
        raise NoMetastableWellError("zero acceleration: exterior has no slope")
    t_hop = p.hbar**2 / (2.0 * p.mass * grid.dx**2)
    sigma = 2.0 * t_hop / (spec.slope * grid.dx)
    return t_hop, sigma


def nu_sigma(j: int, energy: complex, spec: PotentialSpec, grid: Grid):
    """(nu_j, sigma): order and argument of the exterior Bessel solution."""
    t_hop, sigma = _lattice_scales(spec, grid)
    nu = j + sigma * (1.0 - energy / (2.0 * t_hop))
    return nu, sigma


def _boundary_index(grid: Grid) -> int:
    if grid.n_points % 2 != 1 or abs(grid.x_min + grid.x_max) > 1e-12:
        raise ValueError("resonance solver expects a symmetric grid about x=0")
    return (grid.n_points - 1) // 2


def right_closure(
    energy: complex, spec: PotentialSpec, grid: Grid, tol: float = 1e-12
) -> ExteriorClosure:
    """Minimal (decaying) exterior ratio by backward continued fraction.

    The fraction starts deep enough that the linear potential dominates
    Re E and its depth is doubled until the boundary ratio is stable to
    ``tol`` in relative terms.
    """
    t_hop, sigma = _lattice_scales(spec, grid)
    nb = _boundary_index(grid)
    slope_site = spec.slope * grid.dx
    j_turn = int(np.ceil(energy.real / slope_site)) if energy.real > 0 else 0

    def chain(depth: int) -> complex:
        r = 0.0 + 0.0j
        j = max(nb, j_turn) + depth
        while j > nb:
            beta = 2.0 + (slope_site * j - energy) / t_hop
            r = 1.0 / (beta - r)
            j -= 1
        return r

    depth = 64
    prev = chain(depth)
    while depth <= 2**22:
        depth *= 2
        cur = chain(depth)
        if abs(cur - prev) <= tol * abs(cur):
            return ExteriorClosure("R", cur, t_hop)
        prev = cur
    raise NumericError("right-closure continued fraction did not converge",
                       depth=depth, last=prev)


def _log_jv_debye(nu: complex, z: float) -> complex:
    """log J_nu(z) for Re(nu/z) >= ~2 via the uniform Debye expansion."""
    tanh_a = np.sqrt(1.0 - (z / nu) ** 2)
    alpha = np.arccosh(nu / z)
    t = 1.0 / tanh_a
    series = sum(np.polyval(poly, t) / nu**k for k, poly in enumerate(_DEBYE_POLY))
    return nu * (tanh_a - alpha) - 0.5 * np.log(2.0 * np.pi * nu * tanh_a) + np.log(series)


def hankel1_ratio(
    varsigma: complex, sigma: float, j_hi: int, anchor_ratio: float = 2.0,
    wronskian_tol: float = 1e-6,
):
    """H1_{nu_{j_hi - 1}}(sigma) / H1_{nu_{j_hi}}(sigma) for nu_j = j + varsigma.

    Twin Debye-anchored recurrences for J_{nu_j} and (-1)^j J_{-nu_j};
    each runs in its stable (dominant) direction toward j_hi. Returns
    (ratio, wronskian_relative_error).
    """
    if abs(np.pi * varsigma.imag) > 600.0:
        raise NumericError("exterior order too far from the real axis",
                           varsigma=varsigma)

    def beta(j):
        return 2.0 * (j + varsigma) / sigma

    nu_anchor = max(anchor_ratio * sigma, sigma + 60.0, 80.0)

    # F_j = J_{nu_j}: anchored deep right, recurred leftward.
    jf = int(np.ceil(nu_anchor - varsigma.real))
    lf = _log_jv_debye(jf + varsigma, sigma)
    log_scale_f = lf
    f_prev = np.exp(_log_jv_debye(jf + 1 + varsigma, sigma) - lf)  # at jf+1
    f_cur = 1.0 + 0.0j  # at jf
    j = jf
    while j > j_hi - 1:
        f_prev, f_cur = f_cur, beta(j) * f_cur - f_prev
        j -= 1
        m = abs(f_cur)
        if m > 1e100:
            f_prev /= m
            f_cur /= m
            log_scale_f += np.log(m)
    f_lo, f_hi = f_cur, f_prev  # sites j_hi-1, j_hi

    # G_j = (-1)^j J_{-nu_j}: anchored deep left, recurred rightward.
    jg = int(np.floor(-nu_anchor - varsigma.real))
    lg = _log_jv_debye(-(jg + varsigma), sigma)
    log_scale_g = lg
    g_cur = complex(1 - 2 * (jg & 1))  # (-1)^jg, at jg
    g_prev = (1 - 2 * ((jg - 1) & 1)) * np.exp(
        _log_jv_debye(-(jg - 1 + varsigma), sigma) - lg
    )  # at jg-1
    j = jg
    while j < j_hi:
        g_prev, g_cur = g_cur, beta(j) * g_cur - g_prev
        j += 1
        m = abs(g_cur)
        if m > 1e100:
            g_prev /= m
            g_cur /= m
            log_scale_g += np.log(m)
    g_hi, g_lo = g_cur, g_prev  # sites j_hi, j_hi-1

    w = (f_lo * g_hi - f_hi * g_lo) * np.exp(log_scale_f + log_scale_g)
    w_true = 2.0 * np.sin(np.pi * varsigma) / (np.pi * sigma)
    w_err = abs(w - w_true) / abs(w_true)
    if w_err > wronskian_tol:
        raise NumericError("exterior Wronskian validation failed",
                           relative_error=float(w_err))

    # H1_j  propto  G_j - exp(-i pi varsigma) F_j  (j-independent prefactor)
    log_rho = -1j * np.pi * varsigma + log_scale_f - log_scale_g
    if log_rho.real < -700.0:
        num, den = g_lo, g_hi
    elif log_rho.real > 700.0:
        num, den = f_lo, f_hi
    else:
        rho = np.exp(log_rho)
        num = g_lo - rho * f_lo
        den = g_hi - rho * f_hi
    return num / den, float(w_err)


def left_closure(energy: complex, spec: PotentialSpec, grid: Grid) -> ExteriorClosure:
    """Outgoing-wave (H1 of complex order) exterior ratio at the left edge."""
    t_hop, sigma = _lattice_scales(spec, grid)
    nb = _boundary_index(grid)
    varsigma = sigma * (1.0 - energy / (2.0 * t_hop))
    ratio, _ = hankel1_ratio(varsigma, sigma, -nb)
    return ExteriorClosure("L", ratio, t_hop)


def interior_matrix(energy: complex, spec: PotentialSpec, grid: Grid):
    """(diagonal, t_hop) of the closed non-hermitian interior problem."""
    t_hop, _ = _lattice_scales(spec, grid)
    diag = (tilted_potential(spec, grid.points) + 2.0 * t_hop).astype(complex)
    diag[-1] += right_closure(energy, spec, grid).v_eff
    diag[0] += left_closure(energy, spec, grid).v_eff
    return diag, t_hop


def nearest_eigenpair(
    diag: np.ndarray,
    t_hop: float,
    shift: complex,
    max_iter: int = 60,
    seed: int = 11,
):
    """Eigenpair of the (complex symmetric) tridiagonal matrix nearest
    ``shift``, by inverse iteration with that fixed shift; the eigenvalue
    is read off with the bilinear Rayleigh quotient."""
    n = diag.shape[0]
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = -t_hop
    ab[2, :-1] = -t_hop
    ab[1] = diag - shift

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = lam_prev = None
    for _ in range(max_iter):
        try:
            w = solve_banded((1, 1), ab, v)
        except np.linalg.LinAlgError:
            # shift numerically on top of an eigenvalue: perturb once
            ab[1] += 1e-12 * (1.0 + abs(shift))
            w = solve_banded((1, 1), ab, v)
        w /= np.linalg.norm(w)
        tw = diag * w
        tw[:-1] -= t_hop * w[1:]
        tw[1:] -= t_hop * w[:-1]
        denom = w @ w
        lam = (w @ tw) / denom if abs(denom) > 1e-12 else np.vdot(w, tw)
        v = w
        if lam_prev is not None and abs(lam - lam_prev) <= 1e-14 * (1.0 + abs(lam)):
            return complex(lam), v
        lam_prev = lam
    resid = np.linalg.norm(tw - lam * v)
    if resid > 1e-8 * np.linalg.norm(diag):
        raise NumericError("inverse iteration stagnated",
                           last_shift=shift, residual=float(resid))
    return complex(lam), v


def interior_eigensolve(
    e_guess: complex,
    spec: PotentialSpec,
    grid: Grid,
    max_iter: int = 60,
):
    """Eigenvalue of the closure-corrected interior matrix nearest
    ``e_guess``; returns (eigenvalue, eigenvector)."""
    diag, t_hop = interior_matrix(e_guess, spec, grid)
    return nearest_eigenpair(diag, t_hop, e_guess, max_iter=max_iter)


def interior_spectrum(energy: complex, spec: PotentialSpec, grid: Grid):
    """Dense spectrum of the closed interior matrix at the given closure
    energy (diagnostics; used for the max-Im candidate selection)."""
    diag, t_hop = interior_matrix(energy, spec, grid)
    mat = np.diag(diag) + np.diag(np.full(grid.n_points - 1, -t_hop + 0j), 1) \
        + np.diag(np.full(grid.n_points - 1, -t_hop + 0j), -1)
    vals, vecs = eig(mat)
    return vals, vecs


def _default_guess(spec: PotentialSpec, grid: Grid) -> complex:
    branch, _ = spectral.metastable_branch_energy(
        spec.params, spec.acceleration, grid
    )
    try:
        level = semiclassics.quantize(semiclassics.mirror_for_wkb(spec), 0, "airy")
        im = -0.5 * semiclassics.gamma_airy(level, spec.params.hbar)
    except Exception:
        im = -0.05
    return complex(branch, im)


def solve_resonance(
    spec: PotentialSpec,
    grid: Grid,
    e0: complex | None = None,
    residual_tol: float = 1e-10,
    fp_max_iter: int = 60,
    powell_budget: int = 500,
) -> ResonanceState:
    """Solve the self-consistency e_k(E) = E for the resonance energy.

    Fixed-point iteration E <- e_k(E) is tried first (it usually contracts
    in a few steps); if the residual floor is not reached, a Powell
    minimization of |e_k(E) - E| over (Re E, Im E) takes over.
    """
    e = _default_guess(spec, grid) if e0 is None else complex(e0)
    iterations = 0
    best = (np.inf, e, None)
    for _ in range(fp_max_iter):
        lam, vec = interior_eigensolve(e, spec, grid)
        iterations += 1
        resid = abs(lam - e)
        if resid < best[0]:
            best = (resid, e, vec)
        if resid <= residual_tol:
            return ResonanceState(
                energy=complex(lam), vector=vec, residual=float(resid),
                iterations=iterations, method="fixed-point",
            )
        e = lam

    def objective(xy):
        nonlocal iterations, best
        ee = complex(xy[0], xy[1])
        lam, vec = interior_eigensolve(ee, spec, grid)
        iterations += 1
        resid = abs(lam - ee)
        if resid < best[0]:
            best = (resid, ee, vec)
        return resid

    start = best[1]
    res = minimize(
        objective,
        [start.real, start.imag],
        method="Powell",
        options={"maxfev": powell_budget, "xtol": 1e-13, "ftol": 1e-13},
    )
    e_opt = complex(res.x[0], res.x[1])
    lam, vec = interior_eigensolve(e_opt, spec, grid)
    resid = abs(lam - e_opt)
    if resid <= residual_tol:
        return ResonanceState(
            energy=complex(lam), vector=vec, residual=float(resid),
            iterations=iterations, method="powell",
        )
    raise NumericError(
        "resonance self-consistency did not reach the residual floor",
        best_energy=best[1], residual=float(best[0]), iterations=iterations,
    )

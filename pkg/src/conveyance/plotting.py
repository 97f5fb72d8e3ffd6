"""Figure rendering for the report path: every CLI command drops PNG
figures next to its delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "energy_levels_figure",
    "survival_figure",
    "distribution_figure",
    "gamma_figure",
    "scaling_figure",
    "wavefunction_figure",
    "spectrogram_figure",
]


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def energy_levels_figure(a_values, levels, path, e_max=None):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for k in range(levels.shape[1]):
        ax.plot(a_values, levels[:, k], lw=0.7, color="tab:blue")
    ax.set_xlabel("acceleration a")
    ax.set_ylabel("energy")
    if e_max is not None:
        ax.set_ylim(top=e_max)
    ax.set_title("energy levels vs acceleration")
    return _save(fig, path)


def survival_figure(curves, path, logscale=False, xlabel="t", title="survival"):
    """curves: {label: (t, p)}"""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, (t, p) in curves.items():
        ax.plot(t, p, lw=1.0, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("p(t)")
    if logscale:
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.set_title(title)
    return _save(fig, path)


def distribution_figure(energies, weights, path, fit=None, center=None):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.semilogy(energies, weights, ".", ms=3, label="|d_k|^2")
    if fit is not None:
        e = np.linspace(energies[0], energies[-1], 800)
        ax.semilogy(
            e, fit.scale / ((e - fit.center) ** 2 + fit.width**2),
            "-", lw=1, label=f"Lorentzian width {fit.width:.3g}",
        )
    if center is not None:
        ax.axvline(center, color="k", ls="--", lw=0.8)
    ax.set_xlabel("energy")
    ax.set_ylabel("weight")
    ax.legend(fontsize=8)
    ax.set_title("overlap distribution")
    return _save(fig, path)


def gamma_figure(table, path, points=None):
    """table: rows with .ma/.gamma_airy/.gamma_weber; points: {label: (ma, gamma)}."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ma = [r.ma for r in table if r.error is None]
    ax.semilogy(ma, [r.gamma_airy for r in table if r.error is None],
                "-", label="WKB-Airy")
    ax.semilogy(ma, [r.gamma_weber for r in table if r.error is None],
                "--", label="WKB-Weber")
    for label, (xs, ys) in (points or {}).items():
        ax.semilogy(xs, ys, "o", ms=5, label=label)
    ax.set_xlabel("ma")
    ax.set_ylabel("Gamma")
    ax.legend(fontsize=8)
    ax.set_title("relaxation rates")
    return _save(fig, path)


def scaling_figure(summary, path):
    """summary: rows (kind, tau, p_final, one_minus_p)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    kinds = sorted({row[0] for row in summary})
    for kind in kinds:
        taus = [row[1] for row in summary if row[0] == kind]
        omp = [row[3] for row in summary if row[0] == kind]
        ax.loglog(taus, omp, "o-", ms=3, lw=0.8, label=kind)
    ax.set_xlabel("tau")
    ax.set_ylabel("1 - p(tau)")
    ax.legend(fontsize=8)
    ax.set_title("excitation vs conveyance time")
    return _save(fig, path)


def wavefunction_figure(x, values, path, title="wavefunction"):
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    axes[0].semilogy(x, np.abs(values) ** 2, lw=0.9)
    axes[0].set_ylabel("|psi|^2")
    axes[1].plot(x, np.unwrap(np.angle(values)), lw=0.9)
    axes[1].set_ylabel("arg psi")
    axes[1].set_xlabel("x")
    axes[0].set_title(title)
    return _save(fig, path)


def spectrogram_figure(spectrogram, survival, path):
    """Instantaneous levels with population-sized markers plus p(t)."""
    fig, ax = plt.subplots(figsize=(7, 5))
    t = spectrogram.times
    for k in range(spectrogram.energies.shape[1]):
        ax.plot(t, spectrogram.energies[:, k], lw=0.4, color="tab:blue", alpha=0.6)
    sizes = 200.0 * spectrogram.weights
    for k in range(spectrogram.energies.shape[1]):
        ax.scatter(t, spectrogram.energies[:, k], s=sizes[:, k],
                   color="tab:green", alpha=0.5, edgecolors="none")
    ax2 = ax.twinx()
    ax2.plot(survival[0], survival[1], "r--", lw=1.2)
    ax2.set_ylabel("p(t)", color="r")
    ax.set_xlabel("t")
    ax.set_ylabel("instantaneous energy")
    ax.set_title("population dynamics")
    return _save(fig, path)

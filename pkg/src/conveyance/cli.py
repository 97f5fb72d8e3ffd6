"""Command-line front end: experiment orchestration and persistence.

Subcommands mirror the analyses of the toolkit:

  spectrum   energy-level diagram vs acceleration
  relax      dephasing survival + Gamma_relax fit + overlap distribution
  absorb     Crank-Nicolson + absorber run, Gamma_absorb fit, snapshots
  wkb        Airy/Weber decay-rate table over an acceleration sweep
  resonance  Siegert state: complex energy JSON + eigenvector CSV
  convey     conveyance runs, sweep summaries, population spectrograms
  compare    merged Gamma table across every method

Each command reads one JSON config, validates it fully, writes CSV/JSON
plus rendered PNG figures into --out, and finishes with a manifest.
Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import plotting, protocols, rates, resonance, semiclassics, spectral
from .config import (
    Manifest,
    absorber_from,
    config_hash,
    grid_from,
    load_config,
    params_from,
    validate_config,
)
from .errors import ConfigError, ConveyanceError, NumericError
from .model import PotentialSpec
from .reports import write_csv, write_json

__all__ = ["main"]


def cmd_spectrum(cfg, out, manifest, args):
    params = params_from(cfg)
    grid = grid_from(cfg)
    sec = cfg["spectrum"]
    a_values = np.asarray(sec["a_values"], dtype=float)
    k_max = int(sec.get("k_max", 30))
    levels = spectral.energy_diagram(params, a_values, grid, k_max)
    rows = [
        (a, k, levels[i, k])
        for i, a in enumerate(a_values)
        for k in range(k_max)
    ]
    manifest.add(write_csv(out / "spectrum.csv", ["a", "k", "energy"], rows, manifest.hash))
    if args.figures:
        manifest.add(plotting.energy_levels_figure(
            a_values, levels, out / "fig_spectrum.png", e_max=sec.get("e_max")))


def cmd_relax(cfg, out, manifest, args):
    params = params_from(cfg)
    grid = grid_from(cfg)
    sec = cfg["relax"]
    t_max = float(sec.get("t_max", 60.0))
    n_times = int(sec.get("n_times", 1201))
    fits = []
    curves = {}
    for a in sec["a_values"]:
        if a == 0.0:
            times = np.linspace(0.0, t_max, n_times)
            p = np.ones_like(times)
            curves["ma=0"] = (times, p)
            manifest.add(write_csv(out / "relax_ma0.csv", ["t", "p"],
                                   zip(times, p), manifest.hash))
            continue
        times, p, fit, coeffs = spectral.relaxation_rate(
            params, a, grid, t_max=t_max, n_times=n_times
        )
        ma = params.mass * a
        label = f"ma={ma:g}"
        curves[label] = (times, p)
        fits.append((a, ma, fit.gamma, fit.window[0], fit.window[1], fit.r_squared))
        manifest.add(write_csv(out / f"relax_ma{ma:g}.csv", ["t", "p"],
                               zip(times, p), manifest.hash))
        manifest.add(write_csv(
            out / f"distribution_ma{ma:g}.csv", ["k", "energy", "weight"],
            ((k, coeffs.energies[k], coeffs.weights[k])
             for k in range(len(coeffs.energies))),
            manifest.hash,
        ))
        if sec.get("lorentzian", False):
            lfit = spectral.lorentzian_fit(
                coeffs.energies, coeffs.weights,
                half_window=sec.get("lorentzian_half_window"),
            )
            manifest.add(write_json(out / f"lorentzian_ma{ma:g}.json", {
                "center": lfit.center, "width": lfit.width,
                "scale": lfit.scale, "residual": lfit.residual,
            }, manifest.hash))
            if args.figures:
                manifest.add(plotting.distribution_figure(
                    coeffs.energies, coeffs.weights,
                    out / f"fig_distribution_ma{ma:g}.png", fit=lfit))
    manifest.add(write_csv(
        out / "relax_fits.csv",
        ["a", "ma", "gamma_relax", "t_start", "t_end", "r_squared"],
        fits, manifest.hash,
    ))
    if args.figures:
        manifest.add(plotting.survival_figure(
            curves, out / "fig_relax.png", logscale=True))


def cmd_absorb(cfg, out, manifest, args):
    params = params_from(cfg)
    grid = grid_from(cfg)
    sec = cfg["absorb"]
    absorber = absorber_from(cfg)
    dt = float(sec.get("dt", cfg.get("time", {}).get("dt", 0.05)))
    traj, fit = rates.absorber_relaxation_rate(
        params, float(sec["acceleration"]), grid, absorber,
        dt=dt, t_max=float(sec["t_max"]),
        fit_start_threshold=float(sec.get("fit_start_threshold", 0.3)),
    )
    manifest.add(write_csv(
        out / "absorb.csv", ["t", "p", "P", "norm"],
        zip(traj.times, traj.p, traj.P, traj.norm), manifest.hash,
    ))
    manifest.add(write_json(out / "absorb_fit.json", {
        "gamma_absorb": fit.gamma, "amplitude": fit.amplitude,
        "offset": fit.offset, "window": list(fit.window),
        "residual": fit.residual,
    }, manifest.hash))
    for t, psi in traj.snapshots:
        manifest.add(write_csv(
            out / f"snapshot_t{t:g}.csv", ["x", "re", "im", "abs2"],
            zip(traj.grid.points, psi.real, psi.imag, np.abs(psi) ** 2),
            manifest.hash,
        ))
    if args.figures:
        manifest.add(plotting.survival_figure(
            {"p(t)": (traj.times, traj.p)}, out / "fig_absorb.png",
            logscale=True, title=f"Gamma_absorb={fit.gamma:.6g}"))


def cmd_wkb(cfg, out, manifest, args):
    params = params_from(cfg)
    sec = cfg["wkb"]
    table = semiclassics.gamma_table(
        params, sec["a_values"], paper_kappa=args.weber_paper_kappa
    )
    manifest.add(write_csv(
        out / "wkb.csv", ["ma", "gamma_airy", "gamma_weber"],
        ((r.ma, r.gamma_airy, r.gamma_weber) for r in table), manifest.hash,
    ))
    if args.figures:
        manifest.add(plotting.gamma_figure(table, out / "fig_wkb.png"))


def cmd_resonance(cfg, out, manifest, args):
    params = params_from(cfg)
    grid = grid_from(cfg)
    sec = cfg["resonance"]
    spec = PotentialSpec(params, float(sec["acceleration"]))
    guess = sec.get("guess")
    e0 = complex(guess[0], guess[1]) if guess else None
    state = resonance.solve_resonance(spec, grid, e0=e0)
    manifest.add(write_json(out / "resonance.json", {
        "m": params.mass, "ma": spec.slope, "dx": grid.dx,
        "xmin": grid.x_min, "xmax": grid.x_max,
        "reE": state.energy.real, "imE": state.energy.imag,
        "gamma": state.gamma, "residual": state.residual,
        "iterations": state.iterations,
    }, manifest.hash))
    psi = state.vector
    manifest.add(write_csv(
        out / "resonance_vector.csv", ["x", "re", "im", "abs2", "phase"],
        zip(grid.points, psi.real, psi.imag, np.abs(psi) ** 2,
            np.angle(psi)), manifest.hash,
    ))
    if args.figures:
        manifest.add(plotting.wavefunction_figure(
            grid.points, psi, out / "fig_resonance.png",
            title=f"E = {state.energy:.6g}"))


def _convey_payload(cfg):
    sec = cfg["convey"]
    return dict(
        cfg=cfg,
        length=float(sec["length"]),
        dt=float(sec.get("dt", cfg.get("time", {}).get("dt", 0.1))),
        levels=[int(k) for k in sec.get("levels", [0])],
    )


def _convey_task(task):
    """Worker: one (kind, tau, level) conveyance run; returns summary + series."""
    cfg, kind, tau, level = task
    params = params_from(cfg)
    grid = grid_from(cfg)
    payload = _convey_payload(cfg)
    proto = protocols.make_protocol(kind, payload["length"], tau)
    result = protocols.run_conveyance(
        proto, params, grid, dt=payload["dt"],
        absorber=absorber_from(cfg), level=level,
    )
    t = result.times
    series = np.column_stack([
        t, proto.position(t), proto.velocity(t), proto.acceleration(t),
        result.p, result.P, result.norm,
    ])
    return kind, tau, level, result.p_final, series


def cmd_convey(cfg, out, manifest, args):
    params = params_from(cfg)
    sec = cfg["convey"]
    payload = _convey_payload(cfg)
    tasks = [
        (cfg, kind, float(tau), level)
        for kind in sec["kinds"]
        for tau in sec["taus"]
        for level in payload["levels"]
    ]
    if args.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_convey_task, tasks))
    else:
        results = [_convey_task(t) for t in tasks]

    summary = []
    for kind, tau, level, p_final, series in results:
        suffix = f"{kind}_tau{tau:g}" + (f"_k{level}" if level else "")
        manifest.add(write_csv(
            out / f"convey_{suffix}.csv",
            ["t", "x0", "v", "a", "p", "P", "norm"],
            series, manifest.hash,
        ))
        summary.append((kind, tau, level, p_final, 1.0 - p_final))
    manifest.add(write_csv(
        out / "sweep_summary.csv",
        ["kind", "tau", "level", "p_final", "one_minus_p"],
        summary, manifest.hash,
    ))
    if args.figures:
        manifest.add(plotting.scaling_figure(
            [(k, tau, p, omp) for k, tau, lev, p, omp in summary if lev == 0],
            out / "fig_sweep.png"))

    if sec.get("spectrogram", False):
        grid = grid_from(cfg)
        k_max = int(sec.get("spectrogram_k", 40))
        stride = int(sec.get("spectrogram_stride", 50))
        for kind in sec["kinds"]:
            if kind == "constant_velocity":
                continue
            for tau in sec["taus"]:
                proto = protocols.make_protocol(kind, payload["length"], float(tau))
                result = protocols.run_conveyance(
                    proto, params, grid, dt=payload["dt"],
                    snapshot_stride=stride,
                )
                sg = protocols.population_spectrogram(result, params, k_max=k_max)
                rows = [
                    (sg.times[i], k, sg.energies[i, k], sg.weights[i, k])
                    for i in range(len(sg.times))
                    for k in range(k_max)
                ]
                manifest.add(write_csv(
                    out / f"spectrogram_{kind}_tau{tau:g}.csv",
                    ["t", "k", "energy", "weight"], rows, manifest.hash,
                ))
                if args.figures:
                    manifest.add(plotting.spectrogram_figure(
                        sg, (result.times, result.p),
                        out / f"fig_spectrogram_{kind}_tau{tau:g}.png"))


def _compare_task(task):
    cfg, a = task
    params = params_from(cfg)
    sec = cfg["compare"]

    def grid_of(name):
        g = sec.get(name)
        if g is None:
            return None
        from .model import Grid

        return Grid.from_bounds(g["x_min"], g["x_max"], g["dx"])

    row = rates.compare_rates(
        params, a,
        relax_grid=grid_of("relax_grid"),
        relax_t_max=float(sec.get("relax_t_max", 60.0)),
        absorb_grid=grid_of("absorb_grid"),
        absorber=absorber_from(cfg),
        absorb_dt=float(sec.get("absorb_dt", 0.05)),
        absorb_t_max=float(sec.get("absorb_t_max", 150.0)),
        resonance_grid=grid_of("resonance_grid"),
        methods=tuple(sec.get("methods", ("relax", "absorb", "wkb", "res"))),
        paper_kappa=bool(sec.get("weber_paper_kappa", False)),
    )
    return row


def cmd_compare(cfg, out, manifest, args):
    sec = cfg["compare"]
    tasks = [(cfg, float(a)) for a in sec["a_values"]]
    if args.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_compare_task, tasks))
    else:
        rows = [_compare_task(t) for t in tasks]
    manifest.add(write_csv(
        out / "compare.csv",
        ["a", "ma", "gamma_relax", "gamma_absorb", "gamma_airy",
         "gamma_weber", "gamma_res", "notes"],
        ((r.acceleration, r.ma, r.gamma_relax, r.gamma_absorb, r.gamma_airy,
          r.gamma_weber, r.gamma_res, r.notes or "") for r in rows),
        manifest.hash,
    ))
    if args.figures:
        table = semiclassics.gamma_table(
            params_from(cfg),
            np.linspace(min(sec["a_values"]), max(sec["a_values"]), 40),
            paper_kappa=bool(sec.get("weber_paper_kappa", False)),
        )
        points = {}
        for label, attr in (("relax", "gamma_relax"), ("absorb", "gamma_absorb"),
                            ("res", "gamma_res")):
            xs = [r.ma for r in rows if np.isfinite(getattr(r, attr))]
            ys = [getattr(r, attr) for r in rows if np.isfinite(getattr(r, attr))]
            if xs:
                points[label] = (xs, ys)
        manifest.add(plotting.gamma_figure(table, out / "fig_compare.png",
                                           points=points))


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "relax": cmd_relax,
    "absorb": cmd_absorb,
    "wkb": cmd_wkb,
    "resonance": cmd_resonance,
    "convey": cmd_convey,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conveyance",
        description="Survival probabilities of a particle in a moving potential well",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="parallel workers for sweeps")
        p.add_argument("--weber-paper-kappa", action="store_true",
                       help="use the literal kappa = exp(-S) Weber convention")
        p.add_argument("--no-figures", dest="figures", action="store_false",
                       help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        validate_config(cfg, args.command)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, args.command)
    try:
        _COMMANDS[args.command](cfg, out, manifest, args)
    except NumericError as exc:
        print(f"numeric failure: {exc} {exc.context}", file=sys.stderr)
        return 3
    except ConveyanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    manifest.write(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Experiment configuration: JSON loading, validation, hashing, manifests.

A config is one JSON document. The common sections ``physical``, ``grid``,
``time`` and ``absorber`` feed every command; each CLI subcommand reads its
own section (``spectrum``, ``relax``, ``absorb``, ``wkb``, ``resonance``,
``convey``, ``compare``). Validation collects every violated constraint
before failing so a bad config is reported in one pass.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError
from .model import Grid, PhysicalParams
from .propagator import AbsorbingPotential

__all__ = [
    "load_config",
    "config_hash",
    "validate_config",
    "params_from",
    "grid_from",
    "absorber_from",
    "Manifest",
]

TOOL_VERSION = "0.1.0"


def load_config(path) -> dict:
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"invalid JSON: {exc}"]) from exc
    if not isinstance(cfg, dict):
        raise ConfigError(["config root must be a JSON object"])
    return cfg


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical (sorted-key) JSON; stable under reordering."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def params_from(cfg: dict) -> PhysicalParams:
    phys = cfg.get("physical", {})
    return PhysicalParams(
        mass=phys.get("mass", 1.0),
        depth=phys.get("depth", 1.0),
        width=phys.get("width", 1.0),
        hbar=phys.get("hbar", 1.0),
    )


def grid_from(cfg: dict) -> Grid:
    g = cfg["grid"]
    return Grid.from_bounds(g["x_min"], g["x_max"], g["dx"])


def absorber_from(cfg: dict) -> AbsorbingPotential | None:
    ab = cfg.get("absorber")
    if ab is None:
        return None
    return AbsorbingPotential(
        strength=ab["strength"], width=ab["width"], side=ab.get("side", "left")
    )


def _check_common(cfg: dict, errors: list[str]):
    g = cfg.get("grid")
    if g is None:
        errors.append("missing 'grid' section")
        return
    for key in ("x_min", "x_max", "dx"):
        if key not in g:
            errors.append(f"grid.{key} missing")
    if all(k in g for k in ("x_min", "x_max", "dx")):
        if g["x_max"] <= g["x_min"]:
            errors.append("grid.x_max must exceed grid.x_min")
        if g["dx"] <= 0:
            errors.append("grid.dx must be positive")
        width = cfg.get("physical", {}).get("width", 1.0)
        if g["x_min"] > -5 * width or g["x_max"] < 5 * width:
            errors.append("grid must contain the well (|x| up to 5 widths)")
    phys = cfg.get("physical", {})
    for key in ("mass", "depth", "width", "hbar"):
        if key in phys and phys[key] <= 0:
            errors.append(f"physical.{key} must be positive")
    ab = cfg.get("absorber")
    if ab is not None:
        if ab.get("strength", 0) < 0:
            errors.append("absorber.strength must be >= 0")
        if ab.get("width", 1) <= 0:
            errors.append("absorber.width must be positive")
        elif g and all(k in g for k in ("x_min", "x_max")):
            if ab["width"] >= g["x_max"] - g["x_min"]:
                errors.append("absorber must fit inside the grid")
        if ab.get("side", "left") not in ("left", "right", "both"):
            errors.append("absorber.side must be left, right or both")


def _check_a_list(section: dict, key: str, name: str, errors: list[str]):
    vals = section.get(key)
    if vals is None:
        errors.append(f"{name}.{key} missing")
    elif not isinstance(vals, list) or len(vals) == 0:
        errors.append(f"{name}.{key} must be a non-empty list")


def validate_config(cfg: dict, command: str):
    """Raise ConfigError listing every violated constraint."""
    errors: list[str] = []
    _check_common(cfg, errors)

    section = cfg.get(command, {})
    if command == "spectrum":
        _check_a_list(section, "a_values", "spectrum", errors)
        if section.get("k_max", 1) < 1:
            errors.append("spectrum.k_max must be >= 1")
    elif command == "relax":
        _check_a_list(section, "a_values", "relax", errors)
        if section.get("t_max", 60.0) <= 0:
            errors.append("relax.t_max must be positive")
    elif command == "absorb":
        if "acceleration" not in section:
            errors.append("absorb.acceleration missing")
        if cfg.get("absorber") is None:
            errors.append("absorb requires an 'absorber' section")
        if section.get("t_max", 1.0) <= 0:
            errors.append("absorb.t_max must be positive")
        if section.get("dt", cfg.get("time", {}).get("dt", 0.05)) <= 0:
            errors.append("absorb.dt must be positive")
    elif command == "wkb":
        _check_a_list(section, "a_values", "wkb", errors)
    elif command == "resonance":
        if "acceleration" not in section:
            errors.append("resonance.acceleration missing")
        elif section["acceleration"] <= 0:
            errors.append("resonance.acceleration must be positive")
        g = cfg.get("grid", {})
        if g and abs(g.get("x_min", -1.0) + g.get("x_max", 1.0)) > 1e-12:
            errors.append("resonance requires a grid symmetric about x = 0")
    elif command == "convey":
        kinds = section.get("kinds")
        if not kinds:
            errors.append("convey.kinds must be a non-empty list")
        else:
            bad = set(kinds) - {"constant_velocity", "cos", "sin"}
            if bad:
                errors.append(f"convey.kinds contains unknown kinds: {sorted(bad)}")
        _check_a_list(section, "taus", "convey", errors)
        length = section.get("length")
        if length is None or length <= 0:
            errors.append("convey.length must be positive")
        g = cfg.get("grid", {})
        if length and g and all(k in g for k in ("x_min", "x_max")):
            if g["x_max"] - g["x_min"] < 2 * length:
                errors.append(
                    "grid must span at least twice the conveyance length"
                )
    elif command == "compare":
        _check_a_list(section, "a_values", "compare", errors)
    else:
        errors.append(f"unknown command {command!r}")

    if errors:
        raise ConfigError(errors)


class Manifest:
    """Run record: config hash, tool version, wall times, output files."""

    def __init__(self, cfg: dict, command: str):
        self.hash = config_hash(cfg)
        self.command = command
        self.started = datetime.now(timezone.utc).isoformat()
        self.outputs: list[str] = []

    def add(self, path):
        self.outputs.append(Path(path).name)

    def write(self, out_dir):
        record = {
            "config_hash": self.hash,
            "tool_version": TOOL_VERSION,
            "command": self.command,
            "started_utc": self.started,
            "finished_utc": datetime.now(timezone.utc).isoformat(),
            "outputs": self.outputs,
        }
        path = Path(out_dir) / "manifest.json"
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w") as fh:
            json.dump(record, fh, indent=2)
        tmp.replace(path)
        return path

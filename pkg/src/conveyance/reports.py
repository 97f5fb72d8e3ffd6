"""Delimited output: atomic CSV/JSON writers with the config-hash stamp.

Every CSV starts with a comment line carrying the config hash, then the
header row. Files are written to a temporary name and renamed into place
so readers never observe partial output; bodies are deterministic for a
given config (timestamps live only in the manifest).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["format_value", "write_csv", "write_json"]


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{v:.12g}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows, cfg_hash: str) -> Path:
    path = Path(path)
    lines = [f"# config_hash={cfg_hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def write_json(path, payload: dict, cfg_hash: str) -> Path:
    path = Path(path)
    payload = {"config_hash": cfg_hash, **payload}
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path

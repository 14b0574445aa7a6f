"""CSV/JSON writers with a reproducibility header.

CSV values use ``%.16e`` (17 significant digits), ``.`` decimals and ``\\n``
line endings; JSON is written with sorted keys. Nothing time-dependent goes
into either, so identical configs give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import ConfigurationError

# Outputs are never silently replaced by different content; the CLI's
# --force flag flips this.
ALLOW_REPLACE = False


def meta(cfg: RunConfig) -> dict:
    return {"tool": f"leedissip {__version__}", "config_sha256": cfg.digest(),
            "seed": cfg.langevin.seed}


def write_csv(path, columns, rows, cfg: RunConfig) -> Path:
    path = Path(path)
    m = meta(cfg)
    lines = [f"# {k} {m[k]}" for k in ("tool", "config_sha256", "seed")]
    lines.append(",".join(columns))
    rows = np.asarray(rows, dtype=float)
    for row in rows:
        lines.append(",".join(f"{v:.16e}" for v in row))
    return _write(Path(path), "\n".join(lines) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: dict, cfg: RunConfig) -> Path:
    path = Path(path)
    doc = {"meta": meta(cfg), **payload}
    return _write(path, json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n")


def _write(path: Path, text: str) -> Path:
    data = text.encode("utf-8")
    if path.exists() and path.read_bytes() != data and not ALLOW_REPLACE:
        raise ConfigurationError(
            f"{path} exists with different content; use a fresh --out or --force")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return path

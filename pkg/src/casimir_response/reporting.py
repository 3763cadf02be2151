"""CSV/JSON artifact writers and the run manifest.

Every CSV starts with ``#`` header lines carrying the tool version, the
scenario hash and the column units, followed by a single column-name row.
Floats are written with ``%.17g`` so a rerun of the same scenario gives
byte-identical bodies. Files are staged in memory and only written once a
command has finished, so a failed run leaves no partial CSV behind.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "casimir-response"


def params_hash(params):
    """Stable 16-hex digest of a JSON-compatible mapping (for runs without a scenario file)."""
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def render_csv(columns, units, rows, scenario_hash, metadata=None, stamp=None):
    """CSV text: comment header, column row, then one line per row."""
    if len(columns) != len(units):
        raise ValueError("one unit per column")
    lines = [
        f"# tool: {TOOL} {__version__}",
        f"# scenario_hash: {scenario_hash}",
        "# units: " + ", ".join(f"{c} [{u}]" for c, u in zip(columns, units)),
    ]
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    if stamp is not None:
        lines.append(f"# generated: {stamp}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def csv_body(text):
    """Data part of a rendered CSV (header comment lines stripped)."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def read_csv(path):
    """Parse a file written by :func:`render_csv` into (header dict, column names, float array)."""
    header, names, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        elif names is None:
            names = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(names or []))
    return header, names, data


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan; write them as strings
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def render_json(payload):
    return json.dumps(_clean(payload), indent=2, sort_keys=True, default=_json_default) + "\n"


@dataclass
class RunManifest:
    subcommand: str
    scenario_hash: str
    config: dict
    outputs: list = field(default_factory=list)
    wall_clock_s: float = 0.0
    tool_version: str = __version__

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "scenario_hash": self.scenario_hash,
            "config": self.config,
            "outputs": list(self.outputs),
            "wall_clock_s": self.wall_clock_s,
            "tool_version": self.tool_version,
        }


class ArtifactSet:
    """Rendered outputs held in memory until :meth:`commit`."""

    def __init__(self, subcommand, scenario_hash, config):
        self.manifest = RunManifest(subcommand, scenario_hash, config)
        self.files = {}
        self._start = time.perf_counter()

    def add_text(self, name, text):
        self.files[name] = text

    def add_csv(self, name, columns, units, rows, metadata=None, stamp=None):
        self.files[name] = render_csv(columns, units, rows, self.manifest.scenario_hash, metadata, stamp)

    def add_json(self, name, payload):
        self.files[name] = render_json(payload)

    def commit(self, out_dir, extra_files=()):
        """Write every staged file (atomically, via rename), then the manifest."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            _atomic_write(out / name, text)
        self.manifest.outputs = sorted(list(self.files) + [Path(p).name for p in extra_files])
        self.manifest.wall_clock_s = time.perf_counter() - self._start
        _atomic_write(out / "manifest.json", render_json(self.manifest.to_dict()))
        return [out / name for name in self.manifest.outputs]


def _atomic_write(path, text):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)

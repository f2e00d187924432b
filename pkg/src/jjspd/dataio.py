"""Columnar text formats shared by the library, the CLI and the demos.

Every file starts with '#'-prefixed metadata lines (``# key: value``),
then a '# columns: ...' line naming the comma-separated numeric columns.
Values are written with repr-level precision so reruns with identical
inputs are byte-identical; no timestamps enter the files.

Units in files are human units: currents in uA, times in s, rates in Hz.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import DataError

__all__ = [
    "config_digest",
    "write_table",
    "read_table",
    "write_rate_curves",
    "read_rate_curves",
    "write_event_trace",
    "read_event_trace",
    "write_samples",
    "read_samples",
]

_KIND_CODES = {"dark": 0, "photon": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def config_digest(config: Mapping[str, Any]) -> str:
    """Stable sha256 digest of a configuration mapping."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _format(value: float) -> str:
    return format(float(value), ".12g")


def write_table(
    path: str | Path,
    columns: Mapping[str, np.ndarray],
    meta: Mapping[str, Any] | None = None,
) -> None:
    """Write named numeric columns with a metadata header."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    n_rows = arrays[0].size if arrays else 0
    if any(a.size != n_rows for a in arrays):
        raise ValueError("all columns must have the same length")
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append("# columns: " + ",".join(names))
    for i in range(n_rows):
        lines.append(",".join(_format(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")


def read_table(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Read a table written by :func:`write_table`."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file {path} not found")
    meta: dict[str, str] = {}
    names: list[str] | None = None
    rows: list[list[float]] = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line.lstrip("# ").partition(":")
            key, value = key.strip(), value.strip()
            if key == "columns":
                names = [n.strip() for n in value.split(",")]
            elif key:
                meta[key] = value
            continue
        if names is None:
            raise DataError(f"{path}: data rows before the '# columns:' header")
        rows.append([float(v) for v in line.split(",")])
    if names is None:
        raise DataError(f"{path}: missing '# columns:' header")
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    if rows and data.shape[1] != len(names):
        raise DataError(f"{path}: row width does not match the columns header")
    return {n: data[:, i] for i, n in enumerate(names)}, meta


# ---------------------------------------------------------------------------
# rate curves
# ---------------------------------------------------------------------------

def write_rate_curves(
    path: str | Path,
    curves: Mapping[str, Mapping[str, np.ndarray]],
    meta: Mapping[str, Any] | None = None,
) -> None:
    """Write rate curves in long format with a channel tag column.

    ``curves`` maps a channel name (e.g. 'dark', 'total', 'ta', 'mqt',
    'light_100pW') to a mapping with at least ``i_b`` [A] and ``rate`` [Hz],
    optionally ``counts``.  Channel names are stored in the header; the
    channel column holds their index.
    """
    names = list(curves)
    i_b, gamma, rate, channel, counts = [], [], [], [], []
    has_counts = any("counts" in c for c in curves.values())
    for idx, name in enumerate(names):
        c = curves[name]
        n = np.asarray(c["i_b"]).size
        i_b.append(np.asarray(c["i_b"], dtype=float) * 1e6)
        gamma.append(np.asarray(c.get("gamma", np.full(n, np.nan)), dtype=float))
        rate.append(np.asarray(c["rate"], dtype=float))
        channel.append(np.full(n, idx, dtype=float))
        if has_counts:
            counts.append(np.asarray(c.get("counts", np.full(n, np.nan)), dtype=float))
    columns = {
        "i_b_uA": np.concatenate(i_b),
        "gamma": np.concatenate(gamma),
        "rate_hz": np.concatenate(rate),
        "channel": np.concatenate(channel),
    }
    if has_counts:
        columns["counts"] = np.concatenate(counts)
    full_meta = dict(meta or {})
    full_meta["channels"] = ",".join(names)
    write_table(path, columns, full_meta)


def read_rate_curves(path: str | Path):
    """Read rate curves back as {channel: {'i_b': [A], 'rate': ..., 'counts': ...}}."""
    data, meta = read_table(path)
    if "channels" not in meta:
        raise DataError(f"{path}: not a rate-curve file (no channels header)")
    names = meta["channels"].split(",")
    out: dict[str, dict[str, np.ndarray]] = {}
    for idx, name in enumerate(names):
        mask = data["channel"] == idx
        entry = {
            "i_b": data["i_b_uA"][mask] * 1e-6,
            "gamma": data["gamma"][mask],
            "rate": data["rate_hz"][mask],
        }
        if "counts" in data:
            counts = data["counts"][mask]
            if not np.all(np.isnan(counts)):
                entry["counts"] = counts
        out[name] = entry
    return out, meta


# ---------------------------------------------------------------------------
# event traces and sample files
# ---------------------------------------------------------------------------

def write_event_trace(path: str | Path, trace, meta: Mapping[str, Any] | None = None) -> None:
    """Write an event trace (t_seconds, kind) with its seed in the header."""
    kinds = np.array([_KIND_CODES.get(str(k), -1) for k in trace.kinds], dtype=float)
    full_meta = dict(meta or {})
    full_meta.setdefault("seed", trace.seed)
    full_meta.setdefault("duration_s", _format(trace.duration))
    full_meta.setdefault("kind_codes", "0=dark,1=photon")
    for key, value in trace.meta.items():
        full_meta.setdefault(f"protocol_{key}", value)
    write_table(path, {"t_seconds": trace.times, "kind": kinds}, full_meta)


def read_event_trace(path: str | Path):
    """Read an event trace; returns (times, kinds, meta)."""
    data, meta = read_table(path)
    kinds = np.array([_KIND_NAMES.get(int(k), "unknown") for k in data["kind"]])
    return data["t_seconds"], kinds, meta


def write_samples(
    path: str | Path,
    samples: np.ndarray,
    column: str = "i_s_uA",
    scale: float = 1e6,
    meta: Mapping[str, Any] | None = None,
) -> None:
    """Write a single-column sample file (switching currents in uA by default).

    NaN entries (no-switch trials) are preserved.
    """
    write_table(path, {column: np.asarray(samples, dtype=float) * scale}, meta)


def read_samples(path: str | Path, column: str = "i_s_uA", scale: float = 1e6):
    data, meta = read_table(path)
    if column not in data:
        raise DataError(f"{path}: missing column {column}")
    return data[column] / scale, meta

"""CSV + JSON sidecar serialization.

Every table is a CSV with a header row and one row per node/atom/sample.
Floats are written with ``repr`` precision so output is byte-reproducible and
round-trips exactly.  Files are written to a temporary name and renamed.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import FrequencyDensity, GridDensity, PhaseEnsemble, QuantileField


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, columns: Mapping[str, np.ndarray]) -> Path:
    names = list(columns)
    cols = [np.asarray(columns[n]).ravel() for n in names]
    if len({c.size for c in cols}) > 1:
        raise ValueError("CSV columns must have equal length")
    lines = [",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(Path(path), "\n".join(lines) + "\n")
    return Path(path)


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path, obj) -> Path:
    _atomic_write(Path(path), json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")
    return Path(path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def _freq_meta(freq: FrequencyDensity) -> dict:
    return {
        "omega_grid": freq.omega_grid,
        "omega_values": freq.values,
        "omega_widths": freq.widths,
        "support_radius": freq.support_radius,
        "origin_value": freq.origin_value,
    }


def _freq_from_meta(meta: dict) -> FrequencyDensity:
    return FrequencyDensity(
        np.array(meta["omega_grid"]),
        np.array(meta["omega_values"]),
        np.array(meta["omega_widths"]),
        meta["support_radius"],
        meta.get("origin_value"),
    )


def save_grid_density(path, f: GridDensity) -> Path:
    th = np.repeat(f.theta_grid, f.freq.size)
    om = np.tile(f.freq.omega_grid, f.m_theta)
    write_csv(path, {"theta": th, "omega": om, "value": f.values.ravel()})
    write_json(sidecar(path), {"kind": "grid_density", "M_theta": f.m_theta, "time": f.time, **_freq_meta(f.freq)})
    return Path(path)


def load_grid_density(path) -> GridDensity:
    meta = read_json(sidecar(path))
    freq = _freq_from_meta(meta)
    cols = read_csv(path)
    vals = cols["value"].reshape(int(meta["M_theta"]), freq.size)
    return GridDensity(freq, vals, meta.get("time", 0.0))


def save_quantile_field(path, q: QuantileField) -> Path:
    s = np.repeat(q.fractions, q.freq.size)
    om = np.tile(q.freq.omega_grid, q.m_eta)
    write_csv(path, {"eta_fraction": s, "omega": om, "phi": q.phi.ravel()})
    write_json(sidecar(path), {"kind": "quantile_field", "M_eta": q.m_eta, "time": q.time, **_freq_meta(q.freq)})
    return Path(path)


def load_quantile_field(path) -> QuantileField:
    meta = read_json(sidecar(path))
    freq = _freq_from_meta(meta)
    cols = read_csv(path)
    m = int(meta["M_eta"])
    return QuantileField(cols["eta_fraction"].reshape(m, freq.size)[:, 0], freq, cols["phi"].reshape(m, freq.size), meta["time"])


def save_ensemble(path, e: PhaseEnsemble, wrap: bool = True) -> Path:
    out = e.wrapped() if wrap else e
    write_csv(path, {"theta": out.theta, "omega": out.omega})
    write_json(sidecar(path), {"kind": "ensemble", "N": e.n, "time": e.time})
    return Path(path)


def load_ensemble(path) -> PhaseEnsemble:
    cols = read_csv(path)
    meta = read_json(sidecar(path)) if sidecar(path).exists() else {}
    return PhaseEnsemble(cols["theta"], cols["omega"], meta.get("time", 0.0))

"""Reading and writing fields, trajectories and reports.

Field binary layout: ``n`` as little-endian int64, the grid hash as
little-endian uint64, then ``n`` little-endian float64 values. A trajectory
is a JSON metadata file next to a ``.bin`` file holding its snapshots (and
optionally its control slices) as consecutive field records.
"""
from __future__ import annotations

import csv
import json
import os
import struct

import numpy as np

from ._jsonutil import clean, dump
from .dynamics import Trajectory
from .errors import GridMismatch
from .spectral import Field, TorusGrid

_HEADER = struct.Struct("<qQ")


def field_to_bytes(u: Field) -> bytes:
    return _HEADER.pack(u.n, u.grid.grid_hash) + np.asarray(u.values, dtype="<f8").tobytes()


def field_from_bytes(buf: bytes, offset: int = 0) -> tuple:
    """Decode one field record; returns ``(field, next_offset)``."""
    n, h = _HEADER.unpack_from(buf, offset)
    grid = TorusGrid(int(n))
    if grid.grid_hash != h:
        raise GridMismatch(f"grid hash {h:#x} does not match a unit torus grid of size {n}")
    start = offset + _HEADER.size
    vals = np.frombuffer(buf, dtype="<f8", count=n, offset=start)
    return Field(grid, vals), start + 8 * n


def write_field(path, u: Field):
    with open(path, "wb") as fh:
        fh.write(field_to_bytes(u))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read())[0]


def field_to_csv(path, u: Field):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(u.grid.x, u.values):
            w.writerow([repr(float(x)), repr(float(v))])


def write_trajectory(stem, traj: Trajectory, controls: np.ndarray | None = None) -> tuple:
    """Write ``stem.json`` and ``stem.bin``; returns both paths.

    ``controls`` (midpoint slices) default to the ones stored on the
    trajectory and are appended after the snapshots.
    """
    if controls is None:
        controls = traj.controls
    g = traj.grid
    meta = {
        "grid": {"n": g.n, "hash": g.grid_hash},
        "dt": traj.dt,
        "n_snapshots": traj.n_snapshots,
        "n_controls": 0 if controls is None else int(len(controls)),
        "flux": traj.flux_id,
        "eps": traj.eps,
        "s": traj.s,
        "meta": clean(traj.meta),
    }
    jpath, bpath = f"{stem}.json", f"{stem}.bin"
    with open(jpath, "w") as fh:
        json.dump(meta, fh, indent=2)
    with open(bpath, "wb") as fh:
        for row in traj.values:
            fh.write(field_to_bytes(Field(g, row)))
        if controls is not None:
            for row in controls:
                fh.write(field_to_bytes(Field(g, row)))
    return jpath, bpath


def read_trajectory(stem) -> Trajectory:
    with open(f"{stem}.json") as fh:
        meta = json.load(fh)
    with open(f"{stem}.bin", "rb") as fh:
        buf = fh.read()
    rows, off = [], 0
    total = meta["n_snapshots"] + meta.get("n_controls", 0)
    for _ in range(total):
        f, off = field_from_bytes(buf, off)
        if f.n != meta["grid"]["n"]:
            raise GridMismatch("record grid differs from the metadata grid")
        rows.append(f.values)
    ns = meta["n_snapshots"]
    controls = np.array(rows[ns:]) if meta.get("n_controls") else None
    return Trajectory(TorusGrid(meta["grid"]["n"]), np.array(rows[:ns]), meta["dt"], meta["flux"],
                      meta.get("eps"), meta.get("s"), controls=controls, meta=meta.get("meta", {}))


def trajectory_from_config(d: dict) -> Trajectory:
    """Load a trajectory named by ``{"trajectory": stem}`` in a config."""
    return read_trajectory(d["trajectory"])


def write_json(path, obj):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        dump(obj, fh, indent=2)


def measure_to_csv(path, measure):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v", "t", "x", "density"])
        for row in measure.rows():
            w.writerow([repr(float(c)) for c in row])

"""Field ingestion and dumps.

Two formats are supported:

* CSV with one row per node: the node indices followed by the value;
* a raw little-endian float64 block with a JSON sidecar (``<path>.json``)
  recording the lattice and, for vector fields, the component shapes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .grid import Lattice, ScalarField, VectorField

__all__ = [
    "scalar_to_csv",
    "scalar_from_csv",
    "write_raw",
    "read_raw",
    "write_scalar_raw",
    "read_scalar_raw",
    "write_vector_raw",
    "read_vector_raw",
]


def scalar_to_csv(field: ScalarField) -> str:
    lat = field.lattice
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{j}" for j in range(lat.dim)] + ["value"])
    for idx in np.ndindex(*lat.shape):
        w.writerow(list(idx) + [repr(float(field.values[idx]))])
    return buf.getvalue()


def scalar_from_csv(text: str, lattice: Lattice, potential: bool = False) -> ScalarField:
    """Parse node rows; nodes missing from the file are an error."""
    rows = list(csv.reader(io.StringIO(text)))
    if rows and not rows[0][0].lstrip("-").isdigit():
        rows = rows[1:]
    values = np.full(lattice.shape, np.nan)
    for row in rows:
        if not row:
            continue
        idx = tuple(int(x) for x in row[: lattice.dim])
        values[idx] = float(row[lattice.dim])
    if np.isnan(values).any():
        raise ValueError(f"{int(np.isnan(values).sum())} nodes have no value")
    f = ScalarField(lattice, values)
    return f.require_potential() if potential else f


def _sidecar(path) -> Path:
    return Path(str(path) + ".json")


def write_raw(path, arrays: list[np.ndarray], lattice: Lattice, kind: str, extra: dict | None = None):
    path = Path(path)
    with open(path, "wb") as fh:
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    meta = {"kind": kind, "dtype": "<f8", "lattice": lattice.to_dict(),
            "shapes": [list(np.shape(a)) for a in arrays]}
    if extra:
        meta.update(extra)
    _sidecar(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_raw(path) -> tuple[list[np.ndarray], Lattice, dict]:
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    if meta.get("dtype", "<f8") != "<f8":
        raise ValueError(f"unsupported dtype {meta['dtype']}")
    flat = np.fromfile(path, dtype="<f8")
    out, start = [], 0
    for shape in meta["shapes"]:
        n = int(np.prod(shape))
        if start + n > flat.size:
            raise ValueError("raw block shorter than the sidecar declares")
        out.append(flat[start:start + n].reshape(shape))
        start += n
    if start != flat.size:
        raise ValueError("raw block longer than the sidecar declares")
    return out, Lattice.from_dict(meta["lattice"]), meta


def write_scalar_raw(path, field: ScalarField):
    write_raw(path, [field.values], field.lattice, "scalar")


def read_scalar_raw(path, potential: bool = False) -> ScalarField:
    arrays, lat, meta = read_raw(path)
    if meta["kind"] != "scalar" or len(arrays) != 1:
        raise ValueError("not a scalar field dump")
    f = ScalarField(lat, arrays[0])
    return f.require_potential() if potential else f


def write_vector_raw(path, field: VectorField):
    write_raw(path, list(field.components), field.lattice, "vector")


def read_vector_raw(path) -> VectorField:
    arrays, lat, meta = read_raw(path)
    if meta["kind"] != "vector":
        raise ValueError("not a vector field dump")
    return VectorField(lat, tuple(arrays))

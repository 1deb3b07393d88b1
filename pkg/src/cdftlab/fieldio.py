"""CDFT-FLD v1 field files and density-pair manifests.

A field file is one JSON header line

    {"dim": ..., "shape": [...], "spacing": [...], "origin": [...],
     "components": ..., "encoding": "binary" | "text"}

followed by the sample body: cells in row-major order with components
fastest. Binary bodies are consecutive little-endian IEEE-754 64-bit
values; text bodies are CSV rows, one cell per row.

Component counts: 1 = scalar, dim = vector, 2 = complex (two real
components per cell). On 1D grids a one-component file reads back as a
ScalarField; pair manifests resolve the scalar/vector ambiguity by role.

A density pair on disk is two field files plus a JSON manifest
{n, provenance, tolerances, rho, jp} with paths relative to the manifest.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .density import DensityPair, Provenance
from .fields import ComplexField, GridSpec, ScalarField, VectorField


def _header(grid, components, encoding):
    return {
        "dim": grid.dim,
        "shape": list(grid.shape),
        "spacing": list(grid.spacing),
        "origin": list(grid.origin),
        "components": components,
        "encoding": encoding,
    }


def _flat_components(field):
    if isinstance(field, ScalarField):
        return field.values[..., None], 1
    if isinstance(field, VectorField):
        return np.moveaxis(field.components, 0, -1), field.grid.dim
    if isinstance(field, ComplexField):
        return np.stack([field.values.real, field.values.imag], axis=-1), 2
    raise TypeError(f"not a field: {type(field)!r}")


def write_field(path, field, encoding="binary"):
    if encoding not in ("binary", "text"):
        raise ValueError(f"unknown encoding {encoding!r}")
    data, comps = _flat_components(field)
    header = json.dumps(_header(field.grid, comps, encoding), sort_keys=True)
    flat = data.reshape(-1, comps)
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(b"\n")
        if encoding == "binary":
            fh.write(flat.astype("<f8").tobytes())
        else:
            lines = "\n".join(
                ",".join(repr(float(x)) for x in row) for row in flat
            )
            fh.write(lines.encode("utf-8"))
            fh.write(b"\n")


def read_field(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        body = fh.read()
    grid = GridSpec(
        int(header["dim"]),
        tuple(header["shape"]),
        tuple(header["spacing"]),
        tuple(header["origin"]),
    )
    comps = int(header["components"])
    count = grid.num_cells * comps
    if header["encoding"] == "binary":
        flat = np.frombuffer(body, dtype="<f8", count=count).astype(float)
    elif header["encoding"] == "text":
        rows = [r for r in body.decode("utf-8").splitlines() if r.strip()]
        flat = np.array(
            [float(x) for row in rows for x in row.split(",")], dtype=float
        )
    else:
        raise ValueError(f"unknown encoding {header['encoding']!r}")
    if flat.size != count:
        raise ValueError(
            f"body holds {flat.size} values, header implies {count}"
        )
    data = flat.reshape(grid.shape + (comps,))
    if comps == 2:
        return ComplexField(grid, data[..., 0] + 1j * data[..., 1])
    if comps == 1:
        return ScalarField(grid, data[..., 0])
    if comps == grid.dim:
        return VectorField(grid, np.moveaxis(data, -1, 0))
    raise ValueError(f"cannot interpret {comps} components on a {grid.dim}D grid")


def as_vector(field) -> VectorField:
    """Wrap a 1D scalar read back from disk as a one-component vector."""
    if isinstance(field, VectorField):
        return field
    if isinstance(field, ScalarField) and field.grid.dim == 1:
        return VectorField(field.grid, field.values[None, :])
    raise TypeError("cannot reinterpret field as a vector")


def write_pair(directory, pair: DensityPair, n, encoding="binary", tolerances=None):
    """Write rho.fld, jp.fld and pair.json under `directory`; returns the
    manifest path."""
    os.makedirs(directory, exist_ok=True)
    rho_path = os.path.join(directory, "rho.fld")
    jp_path = os.path.join(directory, "jp.fld")
    write_field(rho_path, pair.rho, encoding)
    write_field(jp_path, pair.jp, encoding)
    manifest = {
        "n": int(n),
        "provenance": pair.provenance.value,
        "tolerances": tolerances or {},
        "rho": "rho.fld",
        "jp": "jp.fld",
    }
    mpath = os.path.join(directory, "pair.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return mpath


def read_pair(manifest_path):
    """Load a density pair; returns (pair, n, tolerances)."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(manifest_path))
    rho = read_field(os.path.join(base, manifest["rho"]))
    jp = as_vector(read_field(os.path.join(base, manifest["jp"])))
    if not isinstance(rho, ScalarField):
        raise ValueError("rho file must hold a one-component field")
    pair = DensityPair(rho, jp, Provenance(manifest.get("provenance", "raw")))
    return pair, int(manifest["n"]), manifest.get("tolerances", {})

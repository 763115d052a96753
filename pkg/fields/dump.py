import json
import os

import numpy as np

from errors import GridError
from .grid import ComplexField, LinkField, ScalarField

__all__ = ['write_field', 'read_field', 'write_link_field', 'read_link_field']


def write_field(stem, field):
    """Sidecar JSON header plus raw little-endian float64 values, row-major, complex interleaved."""
    grid = field.grid
    kind = "complex" if np.iscomplexobj(field.values) else "real"
    header = {"nx": grid.nx, "ny": grid.ny, "h": grid.h, "origin": list(grid.origin), "kind": kind}
    os.makedirs(os.path.dirname(os.path.abspath(stem)), exist_ok=True)
    with open(f"{stem}.json", "w") as f:
        json.dump(header, f, indent=2, sort_keys=True)
    dtype = "<c16" if kind == "complex" else "<f8"
    with open(f"{stem}.f64", "wb") as f:
        f.write(np.ascontiguousarray(field.values, dtype=dtype).tobytes(order="C"))
    return header


def read_field(stem, grid=None):
    with open(f"{stem}.json", "r") as f:
        header = json.load(f)
    dtype = "<c16" if header["kind"] == "complex" else "<f8"
    with open(f"{stem}.f64", "rb") as f:
        values = np.frombuffer(f.read(), dtype=dtype).reshape(header["nx"], header["ny"]).copy()
    if grid is None:
        return header, values
    if (grid.nx, grid.ny) != (header["nx"], header["ny"]) or not np.isclose(grid.h, header["h"]):
        raise GridError(f"dump {stem} ({header['nx']}x{header['ny']}, h={header['h']}) does not match the grid")
    cls = ComplexField if header["kind"] == "complex" else ScalarField
    return header, cls(grid, values)


def write_link_field(stem, A):
    """Link components padded to node shape (trailing x row, trailing y column zero) as two real dumps."""
    grid = A.grid
    ax = np.zeros(grid.shape)
    ay = np.zeros(grid.shape)
    ax[:-1, :] = A.ax
    ay[:, :-1] = A.ay
    write_field(f"{stem}_x", ScalarField(grid, ax))
    return write_field(f"{stem}_y", ScalarField(grid, ay))


def read_link_field(stem, grid):
    _, ax = read_field(f"{stem}_x", grid)
    _, ay = read_field(f"{stem}_y", grid)
    return LinkField(grid, ax.values[:-1, :].copy(), ay.values[:, :-1].copy())

"""Structured grid geometry: vertex indexing, connectivity, slicing.

Vertices of an ``nx x ny x nz`` grid are numbered x-fastest::

    index(x, y, z) = x + nx * (y + ny * z)

so a flat value array reshapes to ``(nz, ny, nx)`` in C order.  2D data is
represented with ``nz == 1``.

Two connectivity modes exist per dimensionality: face adjacency (6
neighbours in 3D, 4 in 2D) and full vertex adjacency (26 in 3D, 8 in 2D).
The 2D and 3D names are interchangeable aliases; they are normalised
against the grid's actual dimensionality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

FACE = "face6"
FULL = "vertex26"
FACE_2D = "edge4"
FULL_2D = "vertex8"

_FACE_NAMES = {FACE, FACE_2D}
_FULL_NAMES = {FULL, FULL_2D}


def canonical_connectivity(name: str, nz: int) -> str:
    """Normalise a connectivity name against the grid dimensionality."""
    if name in _FACE_NAMES:
        return FACE_2D if nz == 1 else FACE
    if name in _FULL_NAMES:
        return FULL_2D if nz == 1 else FULL
    raise ValidationError(
        f"unknown connectivity {name!r}",
        allowed=sorted(_FACE_NAMES | _FULL_NAMES),
    )


@dataclass(frozen=True)
class GridSpec:
    """Shape, spacing and adjacency rule of a structured grid."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    connectivity: str = FACE

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(s) for s in self.spacing)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValidationError(f"dims must be three positive ints, got {self.dims!r}")
        if len(spacing) != 3 or any(not np.isfinite(s) or s <= 0 for s in spacing):
            raise ValidationError(f"spacing must be three positive reals, got {self.spacing!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "connectivity", canonical_connectivity(self.connectivity, dims[2]))

    @property
    def n_vertices(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def is_2d(self) -> bool:
        return self.dims[2] == 1

    def with_connectivity(self, name: str) -> "GridSpec":
        return GridSpec(self.dims, self.spacing, name)

    def vertex_index(self, x: int, y: int, z: int) -> int:
        nx, ny, nz = self.dims
        if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
            raise ValidationError(f"vertex ({x},{y},{z}) outside grid {self.dims}")
        return x + nx * (y + ny * z)

    def vertex_coords(self, i: int) -> tuple[int, int, int]:
        nx, ny, nz = self.dims
        if not (0 <= i < self.n_vertices):
            raise ValidationError(f"vertex index {i} outside grid of {self.n_vertices}")
        z, rem = divmod(i, nx * ny)
        y, x = divmod(rem, nx)
        return x, y, z

    def offsets(self) -> np.ndarray:
        """Neighbour offsets as an (n, 3) int64 array of (dx, dy, dz)."""
        if self.connectivity in _FACE_NAMES:
            offs = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)]
        else:
            offs = [
                (dx, dy, dz)
                for dz in (-1, 0, 1)
                for dy in (-1, 0, 1)
                for dx in (-1, 0, 1)
                if (dx, dy, dz) != (0, 0, 0)
            ]
        if self.is_2d:
            offs = [o for o in offs if o[2] == 0]
        return np.asarray(offs, dtype=np.int64)

    def neighbors(self, i: int) -> np.ndarray:
        """Vertex ids adjacent to vertex i.  Convenience path, not fast."""
        x, y, z = self.vertex_coords(i)
        nx, ny, nz = self.dims
        out = []
        for dx, dy, dz in self.offsets():
            xx, yy, zz = x + dx, y + dy, z + dz
            if 0 <= xx < nx and 0 <= yy < ny and 0 <= zz < nz:
                out.append(xx + nx * (yy + ny * zz))
        return np.asarray(sorted(out), dtype=np.int64)

    def ndimage_structure(self) -> np.ndarray:
        """Boolean (3,3,3) footprint matching this connectivity, (z,y,x) order."""
        s = np.zeros((3, 3, 3), dtype=bool)
        s[1, 1, 1] = True
        for dx, dy, dz in self.offsets():
            s[1 + dz, 1 + dy, 1 + dx] = True
        return s

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "connectivity": self.connectivity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        try:
            return cls(tuple(d["dims"]), tuple(d.get("spacing", (1.0, 1.0, 1.0))),
                       d.get("connectivity", FACE))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad grid record: {exc}") from exc


def slice_plane(values: np.ndarray, grid: GridSpec, axis: str, index: int) -> np.ndarray:
    """Extract an axis-aligned plane from a flat vertex array.

    Returns a 2D array whose rows vary along the slower of the two
    remaining axes, e.g. axis='z' gives shape (ny, nx).
    """
    nx, ny, nz = grid.dims
    if values.shape != (grid.n_vertices,):
        raise ValidationError(f"value array has shape {values.shape}, grid wants ({grid.n_vertices},)")
    vol = values.reshape(nz, ny, nx)
    limits = {"x": nx, "y": ny, "z": nz}
    if axis not in limits:
        raise ValidationError(f"axis must be one of x, y, z, got {axis!r}")
    if not (0 <= index < limits[axis]):
        raise ValidationError(f"slice index {index} outside axis {axis} of size {limits[axis]}")
    if axis == "z":
        return vol[index, :, :]
    if axis == "y":
        return vol[:, index, :]
    return vol[:, :, index]

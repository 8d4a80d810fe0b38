"""Synthetic datasets standing in for the original case-study volumes.

Three generators, all deterministic per seed:

* ``crossing_stripes_2d``: two stripe populations crossing on a 2D slab,
  with many noisy signal channels per vertex and a ground-truth class
  channel.  Signal vectors are unit class signatures plus noise; the
  crossing region carries stripe A's signature plus an attenuated copy
  of stripe B's and is labeled as class A.
* ``two_blob_3d``: one smooth channel with exactly two strict minima.
* ``tensor_block``: six symmetric-tensor channels from superposing two
  regularized point-load stress kernels on a half space.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .fields import Channel, MultiField, TENSOR_COMPONENTS
from .grid import GridSpec

FIXTURE_KINDS = ("crossing_stripes_2d", "two_blob_3d", "tensor_block")

CROSSING_DEFAULTS = {
    "size": 64,
    "n_channels": 60,
    "stripe_lo": 24,
    "stripe_hi": 40,
    "cross_gain": 0.45,
    "noise": 0.02,
}

TWO_BLOB_DEFAULTS = {
    "dims": (16, 16, 16),
    "centers": ((4.0, 5.0, 6.0), (11.0, 10.0, 9.0)),
    "depths": (1.0, 0.6),
    "widths": (2.5, 2.0),
}

TENSOR_BLOCK_DEFAULTS = {
    "dims": (16, 16, 8),
    "loads": (1.0, -1.0),
    "load_xy": ((5.0, 8.0), (10.0, 8.0)),
    "epsilon": 0.75,
}


def _merged(defaults: dict, params: dict | None, kind: str) -> dict:
    out = dict(defaults)
    if params:
        unknown = set(params) - set(defaults)
        if unknown:
            raise ValidationError(
                f"unknown parameters for {kind}: {sorted(unknown)}")
        out.update(params)
    return out


def _orthonormal_signatures(rng: np.random.Generator, m: int, count: int) -> np.ndarray:
    """Seeded random orthonormal vectors, columns of an (m, count) matrix."""
    if count > m:
        raise ValidationError(f"cannot fit {count} orthonormal signatures in {m} channels")
    raw = rng.normal(size=(m, count))
    q, r = np.linalg.qr(raw)
    return q * np.sign(np.diag(r))


def crossing_stripes_2d(params: dict | None = None, seed: int = 0) -> MultiField:
    p = _merged(CROSSING_DEFAULTS, params, "crossing_stripes_2d")
    n = int(p["size"])
    m = int(p["n_channels"])
    lo, hi = int(p["stripe_lo"]), int(p["stripe_hi"])
    if not (0 <= lo < hi <= n):
        raise ValidationError("stripe bounds must satisfy 0 <= lo < hi <= size")
    gain = float(p["cross_gain"])
    noise = float(p["noise"])
    if noise < 0:
        raise ValidationError("noise must be >= 0")

    rng = np.random.default_rng(seed)
    sig = _orthonormal_signatures(rng, m, 3)   # background, stripe A, stripe B
    xs = np.arange(n)
    in_a = (xs >= lo) & (xs < hi)              # vertical band in x
    label = np.zeros((n, n), dtype=np.float64)  # (y, x)
    label[:, in_a] = 1.0
    in_b_rows = in_a.copy()                     # horizontal band in y
    label[in_b_rows, :] = np.where(label[in_b_rows, :] == 1.0, 1.0, 2.0)

    signal = np.empty((n, n, m), dtype=np.float64)
    signal[:] = sig[:, 0]
    signal[label == 1.0] = sig[:, 1]
    signal[label == 2.0] = sig[:, 2]
    crossing = np.zeros((n, n), dtype=bool)
    crossing[in_b_rows[:, None] & in_a[None, :]] = True
    signal[crossing] = sig[:, 1] + gain * sig[:, 2]
    signal += rng.normal(scale=noise, size=signal.shape) if noise > 0 else 0.0

    grid = GridSpec((n, n, 1))
    chans = [Channel(f"sig{i:02d}", np.ascontiguousarray(signal[:, :, i].ravel()),
                     provenance="fixture:crossing_stripes_2d")
             for i in range(m)]
    chans.append(Channel("label", label.ravel(),
                         provenance="fixture:crossing_stripes_2d;ground-truth"))
    return MultiField(grid, tuple(chans))


def two_blob_3d(params: dict | None = None, seed: int = 0) -> MultiField:
    p = _merged(TWO_BLOB_DEFAULTS, params, "two_blob_3d")
    dims = tuple(int(d) for d in p["dims"])
    if len(dims) != 3:
        raise ValidationError("dims must be (nx, ny, nz)")
    centers = p["centers"]
    depths = p["depths"]
    widths = p["widths"]
    if not (len(centers) == len(depths) == len(widths) == 2):
        raise ValidationError("need exactly two centers, depths and widths")
    nx, ny, nz = dims
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx),
                          indexing="ij")
    vals = np.zeros((nz, ny, nx), dtype=np.float64)
    for (cx, cy, cz), depth, width in zip(centers, depths, widths):
        if depth <= 0 or width <= 0:
            raise ValidationError("depths and widths must be positive")
        r2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
        vals -= depth * np.exp(-r2 / (2.0 * width ** 2))
    grid = GridSpec(dims)
    chan = Channel("blobs", vals.ravel(), provenance="fixture:two_blob_3d")
    return MultiField(grid, (chan,))


def _point_load_stress(x, y, z, px, py, magnitude, epsilon):
    """Regularized half-space stress of a vertical point load at (px, py, 0).

    The classical kernel sigma_ij = 3 P xi xj z / (2 pi R^5) with R softened
    by epsilon so on-grid evaluation stays finite.
    """
    dx = x - px
    dy = y - py
    dz = z
    r2 = dx * dx + dy * dy + dz * dz + epsilon * epsilon
    r5 = r2 ** 2.5
    f = 3.0 * magnitude / (2.0 * np.pi) * dz / r5
    return {
        "xx": f * dx * dx, "yy": f * dy * dy, "zz": f * dz * dz,
        "xy": f * dx * dy, "xz": f * dx * dz, "yz": f * dy * dz,
    }


def tensor_block(params: dict | None = None, seed: int = 0) -> MultiField:
    p = _merged(TENSOR_BLOCK_DEFAULTS, params, "tensor_block")
    dims = tuple(int(d) for d in p["dims"])
    if len(dims) != 3:
        raise ValidationError("dims must be (nx, ny, nz)")
    loads = p["loads"]
    load_xy = p["load_xy"]
    if len(loads) != 2 or len(load_xy) != 2:
        raise ValidationError("need exactly two loads and two load positions")
    eps = float(p["epsilon"])
    if eps <= 0:
        raise ValidationError("epsilon must be > 0")
    nx, ny, nz = dims
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx),
                          indexing="ij")
    depth = z + 1.0      # measure depth from one spacing below the surface
    total = {c: np.zeros((nz, ny, nx), dtype=np.float64) for c in TENSOR_COMPONENTS}
    for (px, py), mag in zip(load_xy, loads):
        part = _point_load_stress(x, y, depth, float(px), float(py),
                                  float(mag), eps)
        for c in TENSOR_COMPONENTS:
            total[c] += part[c]
    grid = GridSpec(dims)
    chans = tuple(Channel(f"s{c}", total[c].ravel(),
                          provenance="fixture:tensor_block")
                  for c in TENSOR_COMPONENTS)
    return MultiField(grid, chans)


def generate_fixture(kind: str, params: dict | None = None, seed: int = 0) -> MultiField:
    """Build one of the synthetic datasets; deterministic per seed."""
    if kind == "crossing_stripes_2d":
        return crossing_stripes_2d(params, seed)
    if kind == "two_blob_3d":
        return two_blob_3d(params, seed)
    if kind == "tensor_block":
        return tensor_block(params, seed)
    raise ValidationError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")

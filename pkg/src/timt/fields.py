"""Multi-channel fields on structured grids, plus derived tensor measures.

A :class:`MultiField` holds M named scalar channels over one grid; its
``matrix()`` view is the M x N attribute matrix with one column per vertex.
:class:`ScalarField` is a single channel tagged with what its values mean
(distance, similarity, plain scalar) so downstream code can validate inputs.

Tensor utilities operate on six-channel symmetric 3x3 tensors stored
component-wise (xx, yy, zz, xy, xz, yz).  Eigenvalues come from the
trigonometric closed form for symmetric 3x3 matrices; shape measures are
the linear / planar / spherical anisotropy fractions

    c_l = (l1 - l2) / tr,   c_p = 2 (l2 - l3) / tr,   c_s = 3 l3 / tr

which sum to one, and the maximum shear l1 - l3.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ChannelError,
    DegenerateChannelError,
    DegenerateTensorError,
    GridMismatchError,
    NonFiniteError,
    ValidationError,
)
from .grid import GridSpec

TENSOR_COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")

_SCALINGS = ("none", "minmax", "zscore")
_MEANINGS = ("distance", "similarity", "generic")


def _require_finite(values: np.ndarray, what: str):
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise NonFiniteError(f"{what} contains non-finite value at vertex {idx}",
                             vertex=idx, count=int(bad.sum()))


@dataclass(frozen=True)
class Channel:
    """One named scalar channel.  ``provenance`` records how it was made."""

    name: str
    values: np.ndarray
    unit: str = ""
    provenance: str = "raw"

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64).ravel())
        if not self.name or not isinstance(self.name, str):
            raise ChannelError(f"channel name must be a non-empty string, got {self.name!r}")
        _require_finite(v, f"channel {self.name!r}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class MultiField:
    """M scalar channels over a shared grid."""

    grid: GridSpec
    channels: tuple[Channel, ...]

    def __post_init__(self):
        chans = tuple(self.channels)
        names = [c.name for c in chans]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ChannelError(f"duplicate channel names {dupes}")
        n = self.grid.n_vertices
        for c in chans:
            if c.values.shape != (n,):
                raise GridMismatchError(
                    f"channel {c.name!r} has {c.values.shape[0]} values, grid wants {n}")
        object.__setattr__(self, "channels", chans)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def channel_names(self) -> list[str]:
        return [c.name for c in self.channels]

    def channel(self, name: str) -> Channel:
        for c in self.channels:
            if c.name == name:
                return c
        raise ChannelError(f"no channel named {name!r}", known=self.channel_names)

    def has_channel(self, name: str) -> bool:
        return any(c.name == name for c in self.channels)

    def matrix(self, selection: list[str] | None = None) -> np.ndarray:
        """Attribute matrix, shape (M, N): one row per channel, column per vertex."""
        names = self.channel_names if selection is None else list(selection)
        return np.stack([self.channel(n).values for n in names], axis=0)

    def with_channel(self, channel: Channel) -> "MultiField":
        if self.has_channel(channel.name):
            raise ChannelError(f"channel {channel.name!r} already exists")
        return MultiField(self.grid, self.channels + (channel,))


@dataclass(frozen=True)
class ScalarField:
    """A single scalar over a grid with a declared meaning.

    meaning 'distance' promises values >= 0, 'similarity' promises
    values in [-1, 1].  ``info`` carries free-form diagnostics.
    """

    grid: GridSpec
    values: np.ndarray
    meaning: str = "generic"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64).ravel())
        if v.shape != (self.grid.n_vertices,):
            raise GridMismatchError(
                f"field has {v.shape[0]} values, grid wants {self.grid.n_vertices}")
        _require_finite(v, "scalar field")
        if self.meaning not in _MEANINGS:
            raise ValidationError(f"meaning must be one of {_MEANINGS}, got {self.meaning!r}")
        if self.meaning == "distance" and v.size and float(v.min()) < 0.0:
            raise ValidationError(f"distance field has negative value {float(v.min())}")
        if self.meaning == "similarity" and v.size and (float(v.min()) < -1.0 or float(v.max()) > 1.0):
            raise ValidationError("similarity field leaves [-1, 1]")
        object.__setattr__(self, "values", v)


# ---------------------------------------------------------------------------
# channel scaling

def _scale_one(values: np.ndarray, method: str, name: str) -> np.ndarray:
    if method == "none":
        return values
    if method == "minmax":
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            # constant channel: map to all zeros rather than dividing by zero
            return np.zeros_like(values)
        return (values - lo) / (hi - lo)
    if method == "zscore":
        if values.size < 2:
            raise DegenerateChannelError(
                f"channel {name!r} has {values.size} samples, zscore needs at least 2")
        sd = float(values.std(ddof=1))
        if sd == 0.0:
            raise DegenerateChannelError(f"channel {name!r} has zero variance, cannot zscore")
        return (values - values.mean()) / sd
    raise ValidationError(f"unknown scaling {method!r}", allowed=list(_SCALINGS))


def assemble_attribute_space(mf: MultiField, selection: list[str] | None = None,
                             scaling="none") -> MultiField:
    """Select and rescale channels into a new field for downstream analysis.

    ``scaling`` is either one method name applied to every selected channel
    or a dict mapping channel name to method.  Scaled channels get their
    provenance suffixed so artifacts record what happened.
    """
    names = mf.channel_names if selection is None else list(selection)
    if not names:
        raise ChannelError("selection is empty")
    seen = set()
    for n in names:
        if n in seen:
            raise ChannelError(f"channel {n!r} selected twice")
        seen.add(n)
    out = []
    for n in names:
        c = mf.channel(n)
        method = scaling.get(n, "none") if isinstance(scaling, dict) else scaling
        if method not in _SCALINGS:
            raise ValidationError(f"unknown scaling {method!r} for channel {n!r}",
                                  allowed=list(_SCALINGS))
        scaled = _scale_one(c.values, method, n)
        prov = c.provenance if method == "none" else f"{c.provenance};scaled:{method}"
        out.append(Channel(n, scaled, c.unit, prov))
    return MultiField(mf.grid, tuple(out))


# ---------------------------------------------------------------------------
# symmetric 3x3 tensors

@dataclass(frozen=True)
class Sym3Tensor:
    """One symmetric 3x3 tensor by components."""

    xx: float
    yy: float
    zz: float
    xy: float
    xz: float
    yz: float

    def as_matrix(self) -> np.ndarray:
        return np.array([
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ])


@dataclass(frozen=True)
class EigenTriple:
    """Eigenvalues in descending order l1 >= l2 >= l3."""

    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        if not (self.l1 >= self.l2 >= self.l3):
            raise ValidationError(
                f"eigenvalues out of order: {self.l1}, {self.l2}, {self.l3}")


def eigenvalues_sym3(xx, yy, zz, xy, xz, yz) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sorted eigenvalues of symmetric 3x3 tensors, vectorised.

    Uses the standard trigonometric solution of the characteristic cubic.
    All six inputs broadcast together; returns (l1, l2, l3) descending.
    """
    xx, yy, zz, xy, xz, yz = np.broadcast_arrays(
        *[np.asarray(a, dtype=np.float64) for a in (xx, yy, zz, xy, xz, yz)])
    q = (xx + yy + zz) / 3.0
    p1 = xy * xy + xz * xz + yz * yz
    p2 = (xx - q) ** 2 + (yy - q) ** 2 + (zz - q) ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe_p = np.where(p > 0.0, p, 1.0)
    bxx = (xx - q) / safe_p
    byy = (yy - q) / safe_p
    bzz = (zz - q) / safe_p
    bxy = xy / safe_p
    bxz = xz / safe_p
    byz = yz / safe_p
    # det(B) / 2 for B = (A - q I) / p
    detb = (bxx * (byy * bzz - byz * byz)
            - bxy * (bxy * bzz - byz * bxz)
            + bxz * (bxy * byz - byy * bxz))
    r = np.clip(detb / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    l1 = q + 2.0 * p * np.cos(phi)
    l3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    l2 = 3.0 * q - l1 - l3
    # p == 0 means A is already a multiple of the identity
    iso = p == 0.0
    if np.any(iso):
        l1 = np.where(iso, q, l1)
        l2 = np.where(iso, q, l2)
        l3 = np.where(iso, q, l3)
    # the closed form can allow tiny ordering slips from rounding
    lo = np.minimum(l2, l3)
    hi = np.maximum(l2, l3)
    l2, l3 = hi, lo
    mid = np.minimum(l1, l2)
    l1 = np.maximum(l1, l2)
    l2 = mid
    return l1, l2, l3


def sym3_eigenvalues(t: Sym3Tensor) -> EigenTriple:
    """Eigenvalues of one tensor, descending."""
    l1, l2, l3 = eigenvalues_sym3(t.xx, t.yy, t.zz, t.xy, t.xz, t.yz)
    return EigenTriple(float(l1), float(l2), float(l3))


_TRACE_GUARD = 1e-12


def _westin_arrays(l1, l2, l3, scale):
    """Anisotropy fractions for eigenvalue arrays; raises on tiny traces.

    ``scale`` is a per-item magnitude (max |component|) used to make the
    trace guard relative.
    """
    tr = l1 + l2 + l3
    guard = _TRACE_GUARD * np.maximum(1.0, scale)
    bad = np.abs(tr) < guard
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise DegenerateTensorError(
            f"tensor trace too close to zero at item {idx}",
            vertex=idx, count=int(np.sum(bad)))
    c_l = (l1 - l2) / tr
    c_p = 2.0 * (l2 - l3) / tr
    c_s = 3.0 * l3 / tr
    return c_l, c_p, c_s


def westin_measures(e: EigenTriple, scale: float | None = None) -> tuple[float, float, float]:
    """Linear, planar and spherical anisotropy of one eigenvalue triple.

    The three fractions sum to one.  Raises DegenerateTensorError when the
    trace is smaller than 1e-12 relative to the tensor magnitude.
    """
    if scale is None:
        scale = max(abs(e.l1), abs(e.l2), abs(e.l3))
    c_l, c_p, c_s = _westin_arrays(np.float64(e.l1), np.float64(e.l2),
                                   np.float64(e.l3), np.float64(scale))
    return float(c_l), float(c_p), float(c_s)


def max_shear(e: EigenTriple) -> float:
    """Largest shear, the spread between extreme eigenvalues."""
    return float(e.l1 - e.l3)


# ---------------------------------------------------------------------------
# derived channels

_WESTIN_KINDS = ("c_l", "c_p", "c_s")
_EIG_KINDS = ("eig1", "eig2", "eig3")
DERIVED_KINDS = _EIG_KINDS + _WESTIN_KINDS + ("max_shear", "vec_magnitude")


def derive_channel(mf: MultiField, kind: str, inputs: list[str],
                   name: str | None = None) -> MultiField:
    """Append a channel computed pointwise from existing ones.

    Tensor kinds (eig1..eig3, c_l, c_p, c_s, max_shear) take six channels in
    component order xx, yy, zz, xy, xz, yz.  vec_magnitude takes three.
    """
    if kind not in DERIVED_KINDS:
        raise ValidationError(f"unknown derived kind {kind!r}", allowed=list(DERIVED_KINDS))
    new_name = name or kind
    if mf.has_channel(new_name):
        raise ChannelError(f"channel {new_name!r} already exists, pass an explicit name")

    if kind == "vec_magnitude":
        if len(inputs) != 3:
            raise ValidationError(f"vec_magnitude needs 3 input channels, got {len(inputs)}")
        x, y, z = (mf.channel(n).values for n in inputs)
        out = np.sqrt(x * x + y * y + z * z)
    else:
        if len(inputs) != 6:
            raise ValidationError(
                f"{kind} needs 6 tensor channels ({', '.join(TENSOR_COMPONENTS)}), got {len(inputs)}")
        comps = [mf.channel(n).values for n in inputs]
        l1, l2, l3 = eigenvalues_sym3(*comps)
        if kind in _EIG_KINDS:
            out = (l1, l2, l3)[_EIG_KINDS.index(kind)]
        elif kind == "max_shear":
            out = l1 - l3
        else:
            scale = np.max(np.abs(np.stack(comps)), axis=0)
            c_l, c_p, c_s = _westin_arrays(l1, l2, l3, scale)
            out = {"c_l": c_l, "c_p": c_p, "c_s": c_s}[kind]

    prov = f"derived:{kind}({','.join(inputs)})"
    return mf.with_channel(Channel(new_name, out, "", prov))

"""Trait primitives in attribute subspaces and their induced fields.

A trait is a region of attribute space.  Primitives (point, segment, box,
convex polygon) live in a named subspace, i.e. a subset of the channels;
distance to a primitive is Euclidean distance inside that subspace only.
Primitives compose into expression trees with And / Or / Not plus a
product-space combinator, and an expression evaluated against a MultiField
yields the induced scalar field h(x) = d(f(x), trait), whose sub-level sets
feed the merge tree machinery.

Two composition semantics exist for distance fields:

``csg`` (default)    And -> pointwise max, Or -> pointwise min.  Zero set
                     equals the intersection / union of the children's zero
                     sets, matching the boolean set semantics.
``paper_literal``    And -> min, Or -> max, the opposite convention, kept
                     selectable for reproducing published figures.

Negation has no exact distance field derivable from h alone; both modes use
the monotone reversal max(h) - h, which preserves level-set ordering and is
documented as an approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    ChannelError,
    GridMismatchError,
    TraitError,
    UnsupportedTraitError,
    ValidationError,
)
from .fields import MultiField, ScalarField

SEMANTICS = ("csg", "paper_literal")

_SAMPLE_BUDGET = 200_000


def _check_subspace(subspace) -> tuple[str, ...]:
    sub = tuple(subspace)
    if not sub or not all(isinstance(s, str) and s for s in sub):
        raise TraitError(f"subspace must be non-empty channel names, got {subspace!r}")
    if len(set(sub)) != len(sub):
        raise TraitError(f"subspace repeats a channel: {subspace!r}")
    return sub


def _finite_tuple(values, what: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in out):
        raise TraitError(f"{what} must be finite, got {values!r}")
    return out


# ---------------------------------------------------------------------------
# primitives

@dataclass(frozen=True)
class PointTrait:
    subspace: tuple[str, ...]
    coords: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "subspace", _check_subspace(self.subspace))
        object.__setattr__(self, "coords", _finite_tuple(self.coords, "point coords"))
        if len(self.coords) != len(self.subspace):
            raise TraitError(f"point has {len(self.coords)} coords for "
                             f"{len(self.subspace)} channels")


@dataclass(frozen=True)
class SegmentTrait:
    subspace: tuple[str, ...]
    start: tuple[float, ...]
    end: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "subspace", _check_subspace(self.subspace))
        object.__setattr__(self, "start", _finite_tuple(self.start, "segment start"))
        object.__setattr__(self, "end", _finite_tuple(self.end, "segment end"))
        d = len(self.subspace)
        if len(self.start) != d or len(self.end) != d:
            raise TraitError("segment endpoints must match the subspace dimension")


@dataclass(frozen=True)
class BoxTrait:
    """Axis-aligned closed box; bounds may be infinite (half-spaces)."""

    subspace: tuple[str, ...]
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "subspace", _check_subspace(self.subspace))
        ivs = []
        for k, iv in enumerate(self.intervals):
            lo, hi = (float(v) for v in iv)
            if math.isnan(lo) or math.isnan(hi):
                raise TraitError(f"box interval {k} contains NaN")
            if lo > hi:
                raise TraitError(f"box interval {k} has lo {lo} > hi {hi}")
            ivs.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(ivs))
        if len(self.intervals) != len(self.subspace):
            raise TraitError(f"box has {len(self.intervals)} intervals for "
                             f"{len(self.subspace)} channels")

    @property
    def bounded(self) -> bool:
        return all(math.isfinite(lo) and math.isfinite(hi) for lo, hi in self.intervals)


@dataclass(frozen=True)
class PolygonTrait:
    """Strictly convex polygon in a two-channel subspace, CCW vertex order."""

    subspace: tuple[str, str]
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        sub = _check_subspace(self.subspace)
        if len(sub) != 2:
            raise TraitError(f"polygon subspace needs exactly 2 channels, got {len(sub)}")
        object.__setattr__(self, "subspace", sub)
        verts = tuple(tuple(_finite_tuple(v, "polygon vertex")) for v in self.vertices)
        if len(verts) < 3:
            raise TraitError(f"polygon needs at least 3 vertices, got {len(verts)}")
        object.__setattr__(self, "vertices", verts)
        _check_strictly_convex_ccw(verts)


def _check_strictly_convex_ccw(verts):
    n = len(verts)
    turning = 0.0
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cx, cy = verts[(i + 2) % n]
        ux, uy = bx - ax, by - ay
        vx, vy = cx - bx, cy - by
        cross = ux * vy - uy * vx
        if cross <= 0.0:
            raise TraitError(
                f"polygon not strictly convex CCW at vertex {(i + 1) % n} (cross={cross})")
        turning += math.atan2(cross, ux * vx + uy * vy)
    # a simple convex loop turns by exactly 2*pi; star polygons turn more
    if abs(turning - 2.0 * math.pi) > 1e-9:
        raise TraitError(f"polygon winds {turning / (2 * math.pi):.3f} times, expected once")


TraitPrimitive = Union[PointTrait, SegmentTrait, BoxTrait, PolygonTrait]


# ---------------------------------------------------------------------------
# expressions

@dataclass(frozen=True)
class Leaf:
    primitive: TraitPrimitive


def _check_children(children):
    kids = tuple(children)
    if not kids:
        raise TraitError("composite trait needs at least one child")
    return kids


@dataclass(frozen=True)
class And:
    children: tuple["TraitExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _check_children(self.children))


@dataclass(frozen=True)
class Or:
    children: tuple["TraitExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _check_children(self.children))


@dataclass(frozen=True)
class Not:
    child: "TraitExpr"


@dataclass(frozen=True)
class ProductL2:
    """Cartesian-product-space composition: sqrt of summed squared distances."""

    children: tuple["TraitExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _check_children(self.children))


TraitExpr = Union[Leaf, And, Or, Not, ProductL2]


def iter_leaves(expr: TraitExpr):
    if isinstance(expr, Leaf):
        yield expr.primitive
    elif isinstance(expr, Not):
        yield from iter_leaves(expr.child)
    else:
        for c in expr.children:
            yield from iter_leaves(c)


def subspace_channels(expr: TraitExpr) -> tuple[str, ...]:
    """All channels the expression touches, sorted."""
    names = set()
    for p in iter_leaves(expr):
        names.update(p.subspace)
    return tuple(sorted(names))


def validate_expr(expr: TraitExpr, known_channels) -> None:
    known = set(known_channels)
    missing = [n for n in subspace_channels(expr) if n not in known]
    if missing:
        raise ChannelError(f"trait references unknown channels {missing}",
                           missing=missing, known=sorted(known))


# ---------------------------------------------------------------------------
# distances to primitives

def _point_matrix(p: TraitPrimitive, a: Mapping[str, float]) -> np.ndarray:
    try:
        return np.array([[float(a[name]) for name in p.subspace]])
    except KeyError as exc:
        raise ChannelError(f"attribute vector missing channel {exc.args[0]!r}") from exc


def _dist_point(p: PointTrait, x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x - np.asarray(p.coords), axis=1)


def _dist_segment_nd(a, b, x):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    l2 = float(d @ d)
    if l2 == 0.0:
        return np.linalg.norm(x - a, axis=1)
    t = np.clip((x - a) @ d / l2, 0.0, 1.0)
    closest = a + t[:, None] * d
    return np.linalg.norm(x - closest, axis=1)


def _dist_box(p: BoxTrait, x: np.ndarray) -> np.ndarray:
    lo = np.array([iv[0] for iv in p.intervals])
    hi = np.array([iv[1] for iv in p.intervals])
    # residual per axis is zero for infinite bounds by construction
    below = np.where(np.isfinite(lo), np.maximum(lo - x, 0.0), 0.0)
    above = np.where(np.isfinite(hi), np.maximum(x - hi, 0.0), 0.0)
    res = np.maximum(below, above)
    return np.linalg.norm(res, axis=1)


def _polygon_inside(verts: np.ndarray, x: np.ndarray) -> np.ndarray:
    inside = np.ones(len(x), dtype=bool)
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        cross = (b[0] - a[0]) * (x[:, 1] - a[1]) - (b[1] - a[1]) * (x[:, 0] - a[0])
        inside &= cross >= 0.0
    return inside


def _dist_polygon(p: PolygonTrait, x: np.ndarray) -> np.ndarray:
    verts = np.asarray(p.vertices, dtype=float)
    inside = _polygon_inside(verts, x)
    out = np.zeros(len(x))
    outside = ~inside
    if outside.any():
        xo = x[outside]
        best = np.full(len(xo), np.inf)
        n = len(verts)
        for i in range(n):
            d = _dist_segment_nd(verts[i], verts[(i + 1) % n], xo)
            best = np.minimum(best, d)
        out[outside] = best
    return out


def distances_to_primitive(p: TraitPrimitive, x: np.ndarray) -> np.ndarray:
    """Euclidean distances from rows of x (in p's subspace order) to p."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != len(p.subspace):
        raise TraitError(f"points have dimension {x.shape[1]}, primitive wants {len(p.subspace)}")
    if isinstance(p, PointTrait):
        return _dist_point(p, x)
    if isinstance(p, SegmentTrait):
        return _dist_segment_nd(p.start, p.end, x)
    if isinstance(p, BoxTrait):
        return _dist_box(p, x)
    if isinstance(p, PolygonTrait):
        return _dist_polygon(p, x)
    raise TraitError(f"unknown primitive type {type(p).__name__}")


def primitive_distance(p: TraitPrimitive, a: Mapping[str, float]) -> float:
    """Distance from one attribute vector (a mapping of channel values) to p."""
    return float(distances_to_primitive(p, _point_matrix(p, a))[0])


def primitive_membership(p: TraitPrimitive, a: Mapping[str, float]) -> bool:
    """Exact set membership of an attribute vector in a primitive."""
    x = _point_matrix(p, a)[0]
    if isinstance(p, PointTrait):
        return bool(np.all(x == np.asarray(p.coords)))
    if isinstance(p, BoxTrait):
        lo = np.array([iv[0] for iv in p.intervals])
        hi = np.array([iv[1] for iv in p.intervals])
        return bool(np.all(x >= lo) and np.all(x <= hi))
    if isinstance(p, PolygonTrait):
        return bool(_polygon_inside(np.asarray(p.vertices, float), x[None, :])[0])
    if isinstance(p, SegmentTrait):
        return float(_dist_segment_nd(p.start, p.end, x[None, :])[0]) == 0.0
    raise TraitError(f"unknown primitive type {type(p).__name__}")


def trait_membership(expr: TraitExpr, a: Mapping[str, float]) -> bool:
    """Set membership under boolean semantics (Not = complement)."""
    if isinstance(expr, Leaf):
        return primitive_membership(expr.primitive, a)
    if isinstance(expr, And):
        return all(trait_membership(c, a) for c in expr.children)
    if isinstance(expr, Or):
        return any(trait_membership(c, a) for c in expr.children)
    if isinstance(expr, Not):
        return not trait_membership(expr.child, a)
    if isinstance(expr, ProductL2):
        return all(trait_membership(c, a) for c in expr.children)
    raise TraitError(f"unknown expression type {type(expr).__name__}")


# ---------------------------------------------------------------------------
# induced fields

def _eval_expr(expr: TraitExpr, columns: Mapping[str, np.ndarray], semantics: str) -> np.ndarray:
    if isinstance(expr, Leaf):
        p = expr.primitive
        x = np.stack([columns[name] for name in p.subspace], axis=1)
        return distances_to_primitive(p, x)
    if isinstance(expr, (And, Or)):
        parts = [_eval_expr(c, columns, semantics) for c in expr.children]
        want_max = isinstance(expr, And) == (semantics == "csg")
        out = parts[0]
        for q in parts[1:]:
            out = np.maximum(out, q) if want_max else np.minimum(out, q)
        return out
    if isinstance(expr, Not):
        h = _eval_expr(expr.child, columns, semantics)
        return float(h.max()) - h
    if isinstance(expr, ProductL2):
        parts = [_eval_expr(c, columns, semantics) for c in expr.children]
        return np.sqrt(sum(q * q for q in parts))
    raise TraitError(f"unknown expression type {type(expr).__name__}")


def induced_distance_field(expr: TraitExpr, mf: MultiField, semantics: str = "csg") -> ScalarField:
    """Evaluate the trait's distance at every vertex's attribute vector.

    The zero level set of the result is exactly the trait preimage for
    leaves and csg-composed And/Or expressions.
    """
    if semantics not in SEMANTICS:
        raise ValidationError(f"semantics must be one of {SEMANTICS}, got {semantics!r}")
    validate_expr(expr, mf.channel_names)
    columns = {name: mf.channel(name).values for name in subspace_channels(expr)}
    raw = _eval_expr(expr, columns, semantics)
    clamped = int(np.count_nonzero(raw < 0.0))
    values = np.maximum(raw, 0.0)
    return ScalarField(mf.grid, values, "distance",
                       {"semantics": semantics, "clamped": clamped})


def combine_fields(op: str, fields, semantics: str = "csg") -> ScalarField:
    """Pointwise boolean combination of already-evaluated distance fields."""
    if semantics not in SEMANTICS:
        raise ValidationError(f"semantics must be one of {SEMANTICS}, got {semantics!r}")
    op = op.lower()
    fields = list(fields)
    if not fields:
        raise ValidationError("combine_fields needs at least one field")
    g = fields[0].grid
    for f in fields:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
        if f.meaning != "distance":
            raise ValidationError(f"combine_fields wants distance fields, got {f.meaning!r}")
    if op == "not":
        if len(fields) != 1:
            raise ValidationError(f"not takes exactly one field, got {len(fields)}")
        h = fields[0].values
        raw = float(h.max()) - h
    elif op in ("and", "or"):
        want_max = (op == "and") == (semantics == "csg")
        raw = fields[0].values
        for f in fields[1:]:
            raw = np.maximum(raw, f.values) if want_max else np.minimum(raw, f.values)
    else:
        raise ValidationError(f"op must be and, or, not; got {op!r}")
    clamped = int(np.count_nonzero(raw < 0.0))
    return ScalarField(g, np.maximum(raw, 0.0), "distance",
                       {"semantics": semantics, "clamped": clamped, "op": op})


def similarity_field(atom, mf: MultiField, selection: list[str] | None = None) -> ScalarField:
    """Cosine similarity between each vertex's attribute vector and an atom.

    Vertices with zero-norm attribute vectors get similarity 0; their count
    lands in the result's info dict.
    """
    atom = np.asarray(atom, dtype=float).ravel()
    names = mf.channel_names if selection is None else list(selection)
    if atom.shape != (len(names),):
        raise ValidationError(
            f"atom has dimension {atom.shape[0]}, field has {len(names)} channels")
    if not np.all(np.isfinite(atom)):
        raise ValidationError("atom contains non-finite values")
    anorm = float(np.linalg.norm(atom))
    if anorm == 0.0:
        raise ValidationError("atom is the zero vector")
    m = mf.matrix(names)
    colnorm = np.linalg.norm(m, axis=0)
    zero = colnorm == 0.0
    denom = np.where(zero, 1.0, colnorm) * anorm
    vals = (atom @ m) / denom
    vals[zero] = 0.0
    vals = np.clip(vals, -1.0, 1.0)
    return ScalarField(mf.grid, vals, "similarity",
                       {"zero_norm_vertices": int(zero.sum())})


def similarity_to_distance(s: ScalarField) -> ScalarField:
    """Turn a similarity field into a distance-like field via 1 - s.

    Monotone decreasing in similarity, so sub-level sweeps of the result
    explore high-similarity regions first.
    """
    if s.meaning != "similarity":
        raise ValidationError(f"expected a similarity field, got {s.meaning!r}")
    return ScalarField(s.grid, 1.0 - s.values, "distance", dict(s.info))


# ---------------------------------------------------------------------------
# Hausdorff distance between traits

@dataclass(frozen=True)
class HausdorffResult:
    """Hausdorff value plus how it was obtained.

    sample_step is None when the result is exact (point-only traits).
    """

    value: float
    sample_step: float | None

    @property
    def exact(self) -> bool:
        return self.sample_step is None

    def __float__(self) -> float:
        return self.value


def _axis_counts(lengths, step):
    """Per-axis sample counts at the requested step, shrunk to a budget."""
    counts = [max(2, int(math.ceil(l / step)) + 1) if l > 0 else 1 for l in lengths]
    total = math.prod(counts)
    while total > _SAMPLE_BUDGET:
        k = int(np.argmax(counts))
        if counts[k] <= 2:
            break
        counts[k] = max(2, counts[k] // 2)
        total = math.prod(counts)
    eff = 0.0
    for l, c in zip(lengths, counts):
        if c > 1:
            eff = max(eff, l / (c - 1))
    return counts, eff


def _sample_primitive(p: TraitPrimitive, step: float):
    """Sample points of a primitive: (points, effective_step, exact)."""
    if isinstance(p, PointTrait):
        return np.array([p.coords], dtype=float), 0.0, True
    if isinstance(p, SegmentTrait):
        a = np.asarray(p.start, float)
        b = np.asarray(p.end, float)
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            return a[None, :], 0.0, True
        n = max(2, int(math.ceil(length / step)) + 1)
        t = np.linspace(0.0, 1.0, n)
        return a + t[:, None] * (b - a), length / (n - 1), False
    if isinstance(p, BoxTrait):
        if not p.bounded:
            raise UnsupportedTraitError("cannot sample an unbounded box")
        lengths = [hi - lo for lo, hi in p.intervals]
        counts, eff = _axis_counts(lengths, step)
        axes = [np.linspace(lo, hi, c) if c > 1 else np.array([lo])
                for (lo, hi), c in zip(p.intervals, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        exact = all(l == 0.0 for l in lengths)
        return pts, eff, exact
    if isinstance(p, PolygonTrait):
        verts = np.asarray(p.vertices, float)
        pieces = []
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            length = float(np.linalg.norm(b - a))
            m = max(2, int(math.ceil(length / step)) + 1)
            t = np.linspace(0.0, 1.0, m, endpoint=False)
            pieces.append(a + t[:, None] * (b - a))
        lo = verts.min(axis=0)
        hi = verts.max(axis=0)
        counts, eff = _axis_counts(list(hi - lo), step)
        xs = np.linspace(lo[0], hi[0], counts[0])
        ys = np.linspace(lo[1], hi[1], counts[1])
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        grid_pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        inner = grid_pts[_polygon_inside(verts, grid_pts)]
        pieces.append(inner)
        return np.concatenate(pieces, axis=0), max(step, eff), False
    raise TraitError(f"unknown primitive type {type(p).__name__}")


def _sample_expr(expr: TraitExpr, step: float):
    """Sample an expression: (points, channel order, effective step, exact)."""
    if isinstance(expr, Leaf):
        pts, eff, exact = _sample_primitive(expr.primitive, step)
        return pts, tuple(expr.primitive.subspace), eff, exact
    if isinstance(expr, Not):
        raise UnsupportedTraitError("cannot sample the complement of a trait")
    if isinstance(expr, ProductL2):
        raise UnsupportedTraitError("cannot sample a product-space combination")
    parts = [_sample_expr(c, step) for c in expr.children]
    order = parts[0][1]
    aligned = []
    for pts, sub, eff, exact in parts:
        if set(sub) != set(order):
            raise TraitError(
                "children of a composite trait span different subspaces "
                f"({sorted(sub)} vs {sorted(order)}); no common embedding")
        perm = [sub.index(n) for n in order]
        aligned.append((pts[:, perm], eff, exact))
    if isinstance(expr, Or):
        pts = np.concatenate([a[0] for a in aligned], axis=0)
        eff = max(a[1] for a in aligned)
        exact = all(a[2] for a in aligned)
        return pts, order, eff, exact
    # And: keep each child's samples that lie within a step of all others
    keep = []
    eff = max(a[1] for a in aligned)
    tol = max(eff, step) * 0.75 + 1e-12
    for i, (pts, _, _) in enumerate(aligned):
        ok = np.ones(len(pts), dtype=bool)
        cols = {name: pts[:, order.index(name)] for name in order}
        for j, child in enumerate(expr.children):
            if j == i:
                continue
            d = _eval_expr(child, cols, "csg")
            ok &= d <= tol
        keep.append(pts[ok])
    pts = np.concatenate(keep, axis=0)
    if len(pts) == 0:
        raise TraitError("trait intersection has no samples; refine the step "
                         "or simplify the expression")
    return pts, order, eff, False


def hausdorff_distance(t1: TraitExpr, t2: TraitExpr, sampling: float = 0.05) -> HausdorffResult:
    """Symmetric Hausdorff distance between two traits.

    Exact for point-only traits; otherwise estimated over boundary and
    interior samples at roughly the given step, with the effective step
    reported on the result.
    """
    if not (sampling > 0.0 and math.isfinite(sampling)):
        raise ValidationError(f"sampling step must be positive, got {sampling!r}")
    p1, sub1, eff1, exact1 = _sample_expr(t1, sampling)
    p2, sub2, eff2, exact2 = _sample_expr(t2, sampling)
    if set(sub1) != set(sub2):
        raise TraitError(
            f"traits span different subspaces ({sorted(sub1)} vs {sorted(sub2)}); "
            "no common embedding")
    perm = [sub2.index(n) for n in sub1]
    p2 = p2[:, perm]
    d12 = cKDTree(p2).query(p1)[0].max()
    d21 = cKDTree(p1).query(p2)[0].max()
    value = float(max(d12, d21))
    exact = exact1 and exact2
    return HausdorffResult(value, None if exact else float(max(eff1, eff2, sampling)))

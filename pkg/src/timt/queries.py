"""Feature extraction queries over trait-induced merge trees.

Four methods turn a tree (and its underlying field) into a labeled
segmentation of the grid:

* ``branch_decomposition``: simplify, then one region per surviving
  branch of the decomposition.  Covers every vertex, no background.
* ``leaf_arcs``: simplify, then one region per remaining minimum,
  consisting of that leaf's incident arc members.  Everything else is
  background.
* ``subtrees``: simplify, then group the vertices strictly below a cut
  level by the sub-tree they hang from.  Vertices at or above the cut
  are background.
* ``crown``: for every minimum whose persistence clears a height delta,
  flood the component of {h <= h(min) + delta} containing it; touching
  crowns merge into one region.

Segment regions are always connected under the dataset connectivity.
Tree-structural groupings (a branch, a sub-tree) can be disconnected in
the domain once other basins carve through them, so each method's raw
vertex grouping is refined into connected components as a final pass;
the ``group`` field on a segment records which structure it came from.
Segment ids are assigned in ascending (minimum value, vertex index)
order of each segment's lowest vertex, which makes label volumes
deterministic and reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GridMismatchError, ValidationError
from .fields import ScalarField
from .grid import GridSpec
from .mergetree import (
    KIND_LEAF,
    METRICS,
    MergeTree,
    branch_decomposition,
    hypervolume_per_pair,
    persistence_pairs,
    simplify,
    sweep_order,
)

BACKGROUND = -1

METHODS = ("branch_decomposition", "leaf_arcs", "subtrees", "crown")


@dataclass(frozen=True)
class QuerySpec:
    """Parameters of one segmentation query.

    ``metric`` and ``threshold`` drive the simplification applied before
    querying; ``cut_level`` is required for (and only for) ``subtrees``,
    ``delta`` for ``crown``.
    """

    method: str
    metric: str = "persistence"
    threshold: float = 0.0
    cut_level: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(
                f"unknown query method {self.method!r}; expected one of {METHODS}")
        if self.metric not in METRICS:
            raise ValidationError(
                f"unknown simplification metric {self.metric!r}; expected one of {METRICS}")
        thr = float(self.threshold)
        if np.isnan(thr) or thr < 0.0:
            raise ValidationError("simplification threshold must be >= 0")
        object.__setattr__(self, "threshold", thr)
        if self.method == "subtrees":
            if self.cut_level is None:
                raise ValidationError("subtrees query needs a cut_level")
            cl = float(self.cut_level)
            if not np.isfinite(cl):
                raise ValidationError("cut_level must be finite")
            object.__setattr__(self, "cut_level", cl)
        elif self.cut_level is not None:
            raise ValidationError("cut_level only applies to the subtrees method")
        if self.method == "crown":
            if self.delta is None:
                raise ValidationError("crown query needs a delta")
            d = float(self.delta)
            if not np.isfinite(d) or d <= 0.0:
                raise ValidationError("crown delta must be finite and > 0")
            object.__setattr__(self, "delta", d)
        elif self.delta is not None:
            raise ValidationError("delta only applies to the crown method")

    def as_dict(self) -> dict:
        d = {"method": self.method, "metric": self.metric,
             "threshold": float(self.threshold)}
        if self.cut_level is not None:
            d["cut_level"] = float(self.cut_level)
        if self.delta is not None:
            d["delta"] = float(self.delta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuerySpec":
        known = {"method", "metric", "threshold", "cut_level", "delta"}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown query fields: {sorted(extra)}")
        if "method" not in d:
            raise ValidationError("query record is missing 'method'")
        return cls(d["method"], d.get("metric", "persistence"),
                   d.get("threshold", 0.0), d.get("cut_level"), d.get("delta"))


@dataclass(frozen=True)
class Segment:
    """One labeled region.

    ``group`` ties the segment back to the structure that produced it:
    the branch index for branch decomposition, the pairing index of the
    leaf for leaf arcs, a representative arc id for sub-trees, and the
    segment's own id for crowns.
    """

    id: int
    min_vertex: int
    min_value: float
    vertex_count: int
    metric_value: float
    group: int


@dataclass(frozen=True)
class Segmentation:
    grid: GridSpec
    labels: np.ndarray            # (N,) int32, BACKGROUND where unlabeled
    segments: tuple[Segment, ...]
    spec: QuerySpec
    info: dict = dc_field(default_factory=dict)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def segment_vertices(self, sid: int) -> np.ndarray:
        return np.flatnonzero(self.labels == sid)


# ---------------------------------------------------------------------------
# shared machinery

def _slice_pair(d: int, n: int) -> tuple[slice, slice]:
    if d >= 0:
        return slice(0, n - d), slice(d, n)
    return slice(-d, n), slice(0, n + d)


def _half_offsets(grid: GridSpec) -> np.ndarray:
    offs = grid.offsets()
    keep = [i for i, (dx, dy, dz) in enumerate(offs)
            if (dz, dy, dx) > (0, 0, 0)]
    return offs[keep]


def _same_group_edges(group: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Adjacent vertex pairs that carry the same non-background group."""
    nx, ny, nz = grid.dims
    vol = group.reshape(nz, ny, nx)
    idx = np.arange(grid.n_vertices, dtype=np.int64).reshape(nz, ny, nx)
    rows, cols = [], []
    for dx, dy, dz in _half_offsets(grid):
        sz = _slice_pair(int(dz), nz)
        sy = _slice_pair(int(dy), ny)
        sx = _slice_pair(int(dx), nx)
        ga = vol[sz[0], sy[0], sx[0]].ravel()
        gb = vol[sz[1], sy[1], sx[1]].ravel()
        m = (ga == gb) & (ga != BACKGROUND)
        if m.any():
            rows.append(idx[sz[0], sy[0], sx[0]].ravel()[m])
            cols.append(idx[sz[1], sy[1], sx[1]].ravel()[m])
    if not rows:
        return (np.empty(0, dtype=np.int64),) * 2
    return np.concatenate(rows), np.concatenate(cols)


def _connected_segments(values: np.ndarray, grid: GridSpec, group: np.ndarray):
    """Split a per-vertex grouping into domain-connected labeled regions.

    Returns ``(labels, reps, counts, groups)``.  ``labels`` is int32 with
    BACKGROUND where ``group`` was BACKGROUND; region i has its lowest
    (value, index) vertex at ``reps[i]``, ``counts[i]`` members, and came
    from ``groups[i]``.  Regions are numbered by ascending rank of their
    lowest vertex, so the region of the global minimum (when labeled)
    gets id 0.
    """
    n = grid.n_vertices
    fg = np.flatnonzero(group != BACKGROUND)
    labels = np.full(n, BACKGROUND, dtype=np.int32)
    if fg.size == 0:
        return labels, *(np.empty(0, dtype=np.int64),) * 3
    rows, cols = _same_group_edges(group, grid)
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)

    _, rank = sweep_order(values)
    by_rank = fg[np.argsort(rank[fg], kind="stable")]
    uniq, first = np.unique(comp[by_rank], return_index=True)
    reps = by_rank[first]                      # lowest vertex of each component
    order = np.argsort(rank[reps], kind="stable")
    uniq, reps = uniq[order], reps[order]

    lookup = np.full(int(comp.max()) + 1, BACKGROUND, dtype=np.int32)
    lookup[uniq] = np.arange(len(uniq), dtype=np.int32)
    labels[fg] = lookup[comp[fg]]
    counts = np.bincount(labels[fg], minlength=len(uniq)).astype(np.int64)
    return labels, reps.astype(np.int64), counts, group[reps].astype(np.int64)


def _pair_metrics(tree: MergeTree, pairing, metric: str) -> np.ndarray:
    if metric == "hypervolume":
        return hypervolume_per_pair(tree, pairing)
    return np.asarray(pairing.persistence, dtype=np.float64)


def _build(grid, values, spec, group, metric_of_group, info) -> Segmentation:
    labels, reps, counts, groups = _connected_segments(values, grid, group)
    segs = tuple(
        Segment(i, int(reps[i]), float(values[reps[i]]), int(counts[i]),
                float(metric_of_group(int(groups[i]))), int(groups[i]))
        for i in range(len(reps)))
    return Segmentation(grid, labels, segs, spec, dict(info))


# ---------------------------------------------------------------------------
# the four methods

def segment_branch_decomposition(tree: MergeTree, spec: QuerySpec) -> Segmentation:
    """One region per surviving branch, split into connected pieces.

    Every vertex is labeled; the branch of the global minimum always
    survives.  ``group`` is the branch index in pairing order, so the
    number of distinct groups equals the surviving pair count.
    """
    if spec.method != "branch_decomposition":
        raise ValidationError(f"spec.method is {spec.method!r}")
    t = simplify(tree, spec.metric, spec.threshold)
    bd = branch_decomposition(t)
    group = bd.branch_of_vertex(t)
    pairing = persistence_pairs(t)
    metrics = _pair_metrics(t, pairing, spec.metric)
    info = {"branches": len(bd)}
    return _build(t.grid, t.values, spec, group, lambda g: metrics[g], info)


def segment_leaf_arcs(tree: MergeTree, spec: QuerySpec) -> Segmentation:
    """One region per minimum of the simplified tree: its leaf arc.

    Saddle and root arcs become background, so this highlights every
    surviving minimum separately.  ``group`` is the pairing index of the
    leaf, which also selects the reported metric.
    """
    if spec.method != "leaf_arcs":
        raise ValidationError(f"spec.method is {spec.method!r}")
    t = simplify(tree, spec.metric, spec.threshold)
    pairing = persistence_pairs(t)
    metrics = _pair_metrics(t, pairing, spec.metric)
    pair_of_node = {int(m): i for i, m in enumerate(pairing.min_node)}
    group_of_arc = np.full(t.n_arcs, BACKGROUND, dtype=np.int64)
    for a in range(t.n_arcs):
        lo = int(t.arc_lower[a])
        if t.node_kind[lo] != KIND_LEAF:
            continue
        up = int(t.arc_upper[a])
        if up != lo or t.n_nodes == 1:  # self arcs only occur on 1-vertex grids
            group_of_arc[a] = pair_of_node[lo]
    group = group_of_arc[t.arc_of_vertex]
    info = {"leaves": int((group_of_arc != BACKGROUND).sum())}
    return _build(t.grid, t.values, spec, group, lambda g: metrics[g], info)


def segment_subtrees(tree: MergeTree, spec: QuerySpec) -> Segmentation:
    """Regions of the domain strictly below the cut level, one per sub-tree.

    Arcs of the simplified tree are grouped whenever they meet at a node
    below the cut; vertices at or above the cut are background.  A cut at
    or below the global minimum labels nothing and says so in ``info``.
    The reported metric is the depth of the region's minimum under the
    cut.
    """
    if spec.method != "subtrees":
        raise ValidationError(f"spec.method is {spec.method!r}")
    t = simplify(tree, spec.metric, spec.threshold)
    cut = float(spec.cut_level)
    sel = t.values < cut
    info: dict = {"cut_level": cut}
    if not sel.any():
        info.update(empty=True, reason="cut level at or below the global minimum")
        labels = np.full(t.grid.n_vertices, BACKGROUND, dtype=np.int32)
        return Segmentation(t.grid, labels, (), spec, info)

    node_vals = t.node_values
    parent = list(range(t.n_arcs))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    anchor: dict[int, int] = {}
    for a in range(t.n_arcs):
        for node in (int(t.arc_lower[a]), int(t.arc_upper[a])):
            if node_vals[node] >= cut:
                continue
            if node in anchor:
                ra, rb = find(a), find(anchor[node])
                if ra != rb:
                    parent[ra] = rb
            else:
                anchor[node] = a
    group_of_arc = np.array([find(a) for a in range(t.n_arcs)], dtype=np.int64)
    group = np.where(sel, group_of_arc[t.arc_of_vertex], BACKGROUND)
    labels, reps, counts, groups = _connected_segments(t.values, t.grid, group)
    segs = tuple(
        Segment(i, int(reps[i]), float(t.values[reps[i]]), int(counts[i]),
                float(cut - t.values[reps[i]]), int(groups[i]))
        for i in range(len(reps)))
    return Segmentation(t.grid, labels, segs, spec, info)


def segment_crowns(h: ScalarField, tree: MergeTree, spec: QuerySpec) -> Segmentation:
    """Level-set collars around every sufficiently persistent minimum.

    A minimum ``a`` qualifies when its persistence is at least ``delta``;
    the global minimum always qualifies.  Its crown is the connected
    component of ``{h <= h(a) + delta}`` containing ``a``.  Overlapping
    or touching crowns fuse, and each fused region reports the largest
    metric among the qualifying minima it contains.
    """
    if spec.method != "crown":
        raise ValidationError(f"spec.method is {spec.method!r}")
    if h.grid != tree.grid:
        raise GridMismatchError("field and tree live on different grids")
    if not np.array_equal(h.values, tree.values):
        raise ValidationError("field values do not match the tree's values")
    t = simplify(tree, spec.metric, spec.threshold)
    pairing = persistence_pairs(t)
    metrics = _pair_metrics(t, pairing, spec.metric)
    delta = float(spec.delta)
    qualify = np.flatnonzero(pairing.essential | (pairing.persistence >= delta))

    nx, ny, nz = t.grid.dims
    vol = t.values.reshape(nz, ny, nx)
    structure = t.grid.ndimage_structure()
    union = np.zeros(t.grid.n_vertices, dtype=bool)
    seeds = []
    for i in qualify:
        v = int(t.node_vertex[pairing.min_node[i]])
        seeds.append((v, float(metrics[i])))
        lab, _ = ndimage.label(vol <= t.values[v] + delta, structure=structure)
        lab = lab.ravel()
        union |= lab == lab[v]

    group = np.where(union, 0, BACKGROUND)
    labels, reps, counts, _ = _connected_segments(t.values, t.grid, group)
    seg_metric = np.zeros(len(reps), dtype=np.float64)
    for v, m in seeds:
        s = labels[v]
        seg_metric[s] = max(seg_metric[s], m)
    segs = tuple(
        Segment(i, int(reps[i]), float(t.values[reps[i]]), int(counts[i]),
                float(seg_metric[i]), i)
        for i in range(len(reps)))
    info = {"delta": delta, "qualifying_minima": len(seeds)}
    return Segmentation(t.grid, labels, segs, spec, info)


def run_query(h: ScalarField, tree: MergeTree, spec: QuerySpec) -> Segmentation:
    """Dispatch a query spec to the matching method."""
    if spec.method == "branch_decomposition":
        return segment_branch_decomposition(tree, spec)
    if spec.method == "leaf_arcs":
        return segment_leaf_arcs(tree, spec)
    if spec.method == "subtrees":
        return segment_subtrees(tree, spec)
    return segment_crowns(h, tree, spec)


# ---------------------------------------------------------------------------
# reporting and validation

def segmentation_report(s: Segmentation) -> list[dict]:
    """Per-segment rows sorted by (minimum value, id); drives legends."""
    rows = [
        {"id": seg.id, "min_vertex": seg.min_vertex, "min_value": seg.min_value,
         "vertex_count": seg.vertex_count, "metric_value": seg.metric_value,
         "group": seg.group}
        for seg in s.segments
    ]
    rows.sort(key=lambda r: (r["min_value"], r["id"]))
    return rows


def validate_segmentation(s: Segmentation, values: np.ndarray) -> None:
    """Raise ValidationError when internal bookkeeping disagrees.

    Checks label range, declared ids, per-segment counts and minima, and
    that every segment is one connected piece under the grid connectivity.
    """
    values = np.asarray(values, dtype=np.float64)
    if s.labels.shape != (s.grid.n_vertices,):
        raise ValidationError("label array does not match the grid")
    if s.labels.dtype != np.int32:
        raise ValidationError("labels must be int32")
    ids = np.array([seg.id for seg in s.segments], dtype=np.int64)
    if len(ids) and not np.array_equal(ids, np.arange(len(ids))):
        raise ValidationError("segment ids must be 0..K-1 in order")
    present = np.unique(s.labels)
    present = present[present != BACKGROUND]
    if not np.array_equal(present, ids):
        raise ValidationError("labels reference undeclared or missing segments")
    if s.spec.method == "branch_decomposition" and (s.labels == BACKGROUND).any():
        raise ValidationError("branch decomposition may not leave background")
    for seg in s.segments:
        vs = np.flatnonzero(s.labels == seg.id)
        if len(vs) != seg.vertex_count:
            raise ValidationError(f"segment {seg.id} count mismatch")
        lo = vs[np.argmin(values[vs])]
        if values[lo] != seg.min_value or values[seg.min_vertex] != seg.min_value:
            raise ValidationError(f"segment {seg.id} minimum mismatch")
        if s.labels[seg.min_vertex] != seg.id:
            raise ValidationError(f"segment {seg.id} minimum vertex not inside it")
    if len(ids):
        rows, cols = _same_group_edges(s.labels.astype(np.int64), s.grid)
        graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                           shape=(s.grid.n_vertices,) * 2)
        _, comp = connected_components(graph, directed=False)
        for seg in s.segments:
            vs = np.flatnonzero(s.labels == seg.id)
            if len(np.unique(comp[vs])) != 1:
                raise ValidationError(f"segment {seg.id} is not connected")

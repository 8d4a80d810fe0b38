"""Merge trees of scalar fields on structured grids.

The tree is built by a single ascending sweep over vertices sorted by
(value, vertex index) with a union-find over the grid neighbourhood graph:
a vertex below all processed neighbours opens a leaf arc, a vertex joining
one component extends that component's open arc, and a vertex joining two
or more components is a saddle that closes their arcs and opens a new one.
The (value, index) order doubles as a symbolic perturbation, so ties are
deterministic and every event involves exactly one vertex.

Persistence pairing follows the elder rule (the oldest minimum survives a
merge), branches group arcs by the minimum that owns them, and
simplification repeatedly cancels the cheapest childless branch.  The sweep
itself is compiled with numba; everything above it is plain numpy on the
(much smaller) node/arc tables so it also runs on simplified trees.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import DiagramTooLargeError, GridMismatchError, ValidationError
from .fields import ScalarField
from .grid import GridSpec

KIND_LEAF = "leaf-minimum"
KIND_SADDLE = "saddle"
KIND_ROOT = "root"

DIRECTIONS = ("sublevel", "superlevel")

BOTTLENECK_MAX_POINTS = 64


@njit(cache=True)
def _sweep(order, rank, nx, ny, nz, offsets):
    """Union-find sweep; returns per-vertex arc ids and arc endpoints."""
    n = order.shape[0]
    parent = np.full(n, -1, np.int64)
    comp_min = np.zeros(n, np.int64)      # at a set root: the elder minimum
    comp_arc = np.zeros(n, np.int64)      # at a set root: the open arc id
    arc_of = np.full(n, -1, np.int64)
    cap = 2 * n + 2
    arc_lower = np.empty(cap, np.int64)
    arc_upper = np.full(cap, -1, np.int64)
    n_arcs = 0
    roots_buf = np.empty(32, np.int64)
    nxny = nx * ny
    for pos in range(n):
        v = order[pos]
        z = v // nxny
        rem = v - z * nxny
        y = rem // nx
        x = rem - y * nx
        nroots = 0
        for k in range(offsets.shape[0]):
            xx = x + offsets[k, 0]
            yy = y + offsets[k, 1]
            zz = z + offsets[k, 2]
            if xx < 0 or xx >= nx or yy < 0 or yy >= ny or zz < 0 or zz >= nz:
                continue
            nb = xx + nx * (yy + ny * zz)
            if rank[nb] < pos:
                r = nb
                while parent[r] != r:
                    r = parent[r]
                w = nb
                while parent[w] != r:
                    pw = parent[w]
                    parent[w] = r
                    w = pw
                seen = False
                for t in range(nroots):
                    if roots_buf[t] == r:
                        seen = True
                        break
                if not seen:
                    roots_buf[nroots] = r
                    nroots += 1
        if nroots == 0:
            # local minimum: open a leaf arc
            parent[v] = v
            comp_min[v] = v
            arc_lower[n_arcs] = v
            comp_arc[v] = n_arcs
            arc_of[v] = n_arcs
            n_arcs += 1
        elif nroots == 1:
            r = roots_buf[0]
            parent[v] = r
            arc_of[v] = comp_arc[r]
        else:
            # merge event at v
            elder = roots_buf[0]
            for t in range(1, nroots):
                if rank[comp_min[roots_buf[t]]] < rank[comp_min[elder]]:
                    elder = roots_buf[t]
            for t in range(nroots):
                arc_upper[comp_arc[roots_buf[t]]] = v
            if pos == n - 1:
                # merging at the global max: v tops out the elder arc itself
                arc_of[v] = comp_arc[elder]
                new_arc = comp_arc[elder]
            else:
                arc_lower[n_arcs] = v
                arc_of[v] = n_arcs
                new_arc = n_arcs
                n_arcs += 1
            for t in range(nroots):
                parent[roots_buf[t]] = elder
            parent[v] = elder
            comp_arc[elder] = new_arc
    # close the arc that is still open at the global max
    r = order[n - 1]
    while parent[r] != r:
        r = parent[r]
    a = comp_arc[r]
    if arc_upper[a] == -1:
        arc_upper[a] = order[n - 1]
    return arc_of, arc_lower[:n_arcs].copy(), arc_upper[:n_arcs].copy()


@dataclass
class MergeTree:
    """Merge tree plus the per-vertex arc membership partition.

    Nodes are sorted by sweep rank (value, then vertex index); arcs by the
    ranks of their endpoints.  ``arc_of_vertex[v]`` is the arc whose member
    list contains v, so arc member lists partition all vertices.
    """

    grid: GridSpec
    values: np.ndarray
    node_vertex: np.ndarray       # (n_nodes,) vertex ids
    node_kind: list[str]
    root: int                     # node index
    arc_lower: np.ndarray         # (n_arcs,) node indices
    arc_upper: np.ndarray
    arc_of_vertex: np.ndarray     # (N,) arc indices
    direction: str = "sublevel"
    tie_rule: str = "index-order"

    @property
    def n_nodes(self) -> int:
        return len(self.node_vertex)

    @property
    def n_arcs(self) -> int:
        return len(self.arc_lower)

    @property
    def node_values(self) -> np.ndarray:
        return self.values[self.node_vertex]

    def leaves(self) -> list[int]:
        return [i for i, k in enumerate(self.node_kind) if k == KIND_LEAF]

    def arc_members(self, a: int) -> np.ndarray:
        return np.flatnonzero(self.arc_of_vertex == a)

    def members_by_arc(self) -> list[np.ndarray]:
        order = np.argsort(self.arc_of_vertex, kind="stable")
        counts = np.bincount(self.arc_of_vertex, minlength=self.n_arcs)
        out = []
        start = 0
        for c in counts:
            out.append(order[start:start + c])
            start += c
        return out

    def child_arcs(self, node: int) -> list[int]:
        return [a for a in range(self.n_arcs)
                if self.arc_upper[a] == node and self.arc_lower[a] != node]

    def up_arc(self, node: int) -> int | None:
        for a in range(self.n_arcs):
            if self.arc_lower[a] == node and self.arc_upper[a] != node:
                return a
        return None


def sweep_order(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending (value, index) order and per-vertex rank."""
    order = np.argsort(values, kind="stable").astype(np.int64)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order), dtype=np.int64)
    return order, rank


def _assemble(grid: GridSpec, values: np.ndarray, rank: np.ndarray,
              lower_v: np.ndarray, upper_v: np.ndarray,
              arc_of_vertex: np.ndarray, direction: str) -> MergeTree:
    """Renumber arc endpoint vertices into sorted node/arc tables."""
    node_vs = np.unique(np.concatenate([lower_v, upper_v]))
    node_vs = node_vs[np.argsort(rank[node_vs], kind="stable")]
    node_rank = rank[node_vs]

    def node_of(vs):
        return np.searchsorted(node_rank, rank[vs])

    perm = np.lexsort((rank[upper_v], rank[lower_v]))
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    arc_lower = node_of(lower_v[perm])
    arc_upper = node_of(upper_v[perm])
    arc_of = inv[arc_of_vertex]

    n_nodes = len(node_vs)
    down = np.zeros(n_nodes, dtype=np.int64)
    has_up = np.zeros(n_nodes, dtype=bool)
    for a in range(len(arc_lower)):
        lo, up = arc_lower[a], arc_upper[a]
        if lo == up:
            continue
        down[up] += 1
        has_up[lo] = True
    kinds = []
    root = -1
    for i in range(n_nodes):
        if down[i] == 0 and not has_up[i]:
            # isolated node: a one-vertex grid's single leaf, also the root
            kinds.append(KIND_LEAF)
            root = i
        elif down[i] == 0:
            kinds.append(KIND_LEAF)
        elif not has_up[i]:
            kinds.append(KIND_ROOT)
            root = i
        else:
            kinds.append(KIND_SADDLE)
    if root < 0:
        raise ValidationError("merge tree has no root; is the grid connected?")
    return MergeTree(grid, values, node_vs, kinds, root,
                     arc_lower.astype(np.int64), arc_upper.astype(np.int64),
                     arc_of.astype(np.int64), direction)


def compute_merge_tree(h: ScalarField, grid: GridSpec | None = None,
                       direction: str = "sublevel") -> MergeTree:
    """Merge tree of the field's sub-level sets (or super-level via negation).

    Deterministic for a fixed grid and tie rule.  For direction
    'superlevel' the stored values are the negated input, so all downstream
    invariants keep referring to an ascending sweep.
    """
    g = h.grid if grid is None else grid
    if grid is not None and grid != h.grid:
        raise GridMismatchError("explicit grid disagrees with the field's grid")
    if direction not in DIRECTIONS:
        raise ValidationError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    values = h.values if direction == "sublevel" else -h.values
    order, rank = sweep_order(values)
    nx, ny, nz = g.dims
    arc_of, lower_v, upper_v = _sweep(order, rank, nx, ny, nz, g.offsets())
    return _assemble(g, values, rank, lower_v, upper_v, arc_of, direction)


# ---------------------------------------------------------------------------
# pairing and branches

@dataclass(frozen=True)
class PersistencePairing:
    """Elder-rule pairs, ordered by the rank of the minimum.

    The first pair is always the essential one (global minimum vs root).
    """

    min_node: np.ndarray
    death_node: np.ndarray
    persistence: np.ndarray
    essential: np.ndarray

    def __len__(self) -> int:
        return len(self.min_node)


@dataclass(frozen=True)
class Branch:
    min_node: int
    death_node: int
    persistence: float
    arc_ids: tuple[int, ...]
    parent: int | None
    children: tuple[int, ...]


@dataclass(frozen=True)
class BranchDecomposition:
    """Branches aligned 1:1 with the persistence pairing order."""

    branches: tuple[Branch, ...]
    branch_of_arc: np.ndarray

    def __len__(self) -> int:
        return len(self.branches)

    def branch_of_vertex(self, tree: MergeTree) -> np.ndarray:
        return self.branch_of_arc[tree.arc_of_vertex]


def _elder_walk(tree: MergeTree):
    """comp_min per node and the owner minimum of every arc."""
    n_nodes = tree.n_nodes
    comp_min = np.full(n_nodes, -1, dtype=np.int64)
    owner = np.full(tree.n_arcs, -1, dtype=np.int64)
    children = [[] for _ in range(n_nodes)]
    for a in range(tree.n_arcs):
        if tree.arc_lower[a] != tree.arc_upper[a]:
            children[tree.arc_upper[a]].append(a)
    pairs = []
    for i in range(n_nodes):  # nodes are rank-sorted, children come first
        kids = children[i]
        if not kids:
            comp_min[i] = i
            continue
        mins = [comp_min[tree.arc_lower[a]] for a in kids]
        elder = min(mins)  # node indices are rank-ordered
        for m in mins:
            if m != elder:
                pairs.append((m, i))
        comp_min[i] = elder
    for a in range(tree.n_arcs):
        owner[a] = comp_min[tree.arc_lower[a]]
    pairs.append((int(comp_min[tree.root]), tree.root))
    pairs.sort()
    return comp_min, owner, pairs


def persistence_pairs(tree: MergeTree) -> PersistencePairing:
    """Elder-rule persistence pairing; one pair per leaf."""
    _, _, pairs = _elder_walk(tree)
    mins = np.array([p[0] for p in pairs], dtype=np.int64)
    deaths = np.array([p[1] for p in pairs], dtype=np.int64)
    vals = tree.node_values
    pers = vals[deaths] - vals[mins]
    essential = np.zeros(len(pairs), dtype=bool)
    essential[0] = True
    return PersistencePairing(mins, deaths, pers, essential)


def branch_decomposition(tree: MergeTree) -> BranchDecomposition:
    """Group arcs by owning minimum into persistence-paired branches."""
    comp_min, owner, pairs = _elder_walk(tree)
    index_of_min = {m: i for i, (m, _) in enumerate(pairs)}
    arc_ids = [[] for _ in pairs]
    branch_of_arc = np.empty(tree.n_arcs, dtype=np.int64)
    for a in range(tree.n_arcs):
        b = index_of_min[int(owner[a])]
        arc_ids[b].append(a)
        branch_of_arc[a] = b
    vals = tree.node_values
    parents: list[int | None] = []
    children: list[list[int]] = [[] for _ in pairs]
    for i, (m, d) in enumerate(pairs):
        if i == 0:
            parents.append(None)
            continue
        p = index_of_min[int(comp_min[d])]
        parents.append(p)
        children[p].append(i)
    branches = tuple(
        Branch(int(m), int(d), float(vals[d] - vals[m]), tuple(arc_ids[i]),
               parents[i], tuple(children[i]))
        for i, (m, d) in enumerate(pairs))
    return BranchDecomposition(branches, branch_of_arc)


def hypervolume_per_pair(tree: MergeTree, pairing: PersistencePairing | None = None) -> np.ndarray:
    """Member count of each pair's branch times its persistence.

    Aligned with the pairing / branch order.  Only the branch's own arcs
    count; nested sub-branches keep their own members.
    """
    bd = branch_decomposition(tree)
    if pairing is not None and len(pairing) != len(bd):
        raise ValidationError("pairing does not match this tree")
    counts = np.bincount(bd.branch_of_vertex(tree), minlength=len(bd)).astype(np.float64)
    pers = np.array([b.persistence for b in bd.branches])
    return counts * pers


# ---------------------------------------------------------------------------
# simplification

METRICS = ("persistence", "hypervolume")


def simplify(tree: MergeTree, metric: str = "persistence", threshold: float = 0.0) -> MergeTree:
    """Cancel the cheapest childless branches while their metric < threshold.

    The essential branch is never cancelled.  Cancelling a leaf branch
    moves its members into the sibling arc of the surviving (parent)
    branch; a saddle left with a single child is spliced out.  Hypervolume
    metrics are re-evaluated as members accumulate.
    """
    if metric not in METRICS:
        raise ValidationError(f"metric must be one of {METRICS}, got {metric!r}")
    if not (threshold >= 0.0):
        raise ValidationError(f"threshold must be >= 0, got {threshold!r}")
    bd = branch_decomposition(tree)
    nb = len(bd)

    counts = np.bincount(bd.branch_of_vertex(tree), minlength=nb).astype(np.int64)
    pers = np.array([b.persistence for b in bd.branches])
    parent = [b.parent for b in bd.branches]
    n_children = np.array([len(b.children) for b in bd.branches], dtype=np.int64)
    branch_alive = np.ones(nb, dtype=bool)
    branch_arcs = [set(b.arc_ids) for b in bd.branches]

    def metric_of(b):
        return float(pers[b]) if metric == "persistence" else float(pers[b] * counts[b])

    # mutable tree tables
    arc_lower = tree.arc_lower.copy()
    arc_upper = tree.arc_upper.copy()
    arc_alive = np.ones(tree.n_arcs, dtype=bool)
    node_alive = np.ones(tree.n_nodes, dtype=bool)
    children_arcs = [set() for _ in range(tree.n_nodes)]
    up_arc = np.full(tree.n_nodes, -1, dtype=np.int64)
    for a in range(tree.n_arcs):
        if arc_lower[a] != arc_upper[a]:
            children_arcs[arc_upper[a]].add(a)
            up_arc[arc_lower[a]] = a
    branch_of_arc = bd.branch_of_arc.copy()

    # union-find over arcs for member relabelling
    arc_dsu = np.arange(tree.n_arcs, dtype=np.int64)

    def find(a):
        r = a
        while arc_dsu[r] != r:
            r = arc_dsu[r]
        while arc_dsu[a] != r:
            arc_dsu[a], a = r, arc_dsu[a]
        return r

    min_rank = {b: bd.branches[b].min_node for b in range(nb)}  # node ids are rank-sorted
    heap = [(metric_of(b), min_rank[b], b)
            for b in range(1, nb) if n_children[b] == 0]
    heapq.heapify(heap)

    while heap:
        key, mrank, b = heapq.heappop(heap)
        if not branch_alive[b] or n_children[b] != 0:
            continue
        cur = metric_of(b)
        if cur != key:
            # metric grew since push (hypervolume absorption); reinsert
            if cur < threshold:
                heapq.heappush(heap, (cur, mrank, b))
            continue
        if cur >= threshold:
            break
        # cancel branch b: it is childless, so it owns exactly one arc
        (a_b,) = tuple(branch_arcs[b])
        s = int(arc_upper[a_b])
        e = parent[b]
        node_alive[arc_lower[a_b]] = False
        arc_alive[a_b] = False
        children_arcs[s].discard(a_b)
        # sibling arc of the surviving parent branch below s
        a_sib = -1
        for a in children_arcs[s]:
            if branch_of_arc[a] == e:
                a_sib = a
                break
        if a_sib < 0:
            raise AssertionError("parent branch has no arc below the saddle")
        arc_dsu[find(a_b)] = find(a_sib)
        branch_arcs[b].clear()
        branch_alive[b] = False
        counts[e] += counts[b]
        n_children[e] -= 1
        if len(children_arcs[s]) == 1 and s != tree.root:
            # splice the now-regular saddle out of the parent branch
            a_up = int(up_arc[s])
            arc_upper[a_sib] = arc_upper[a_up]
            children_arcs[arc_upper[a_up]].discard(a_up)
            children_arcs[arc_upper[a_up]].add(a_sib)
            arc_dsu[find(a_up)] = find(a_sib)
            arc_alive[a_up] = False
            branch_arcs[e].discard(a_up)
            node_alive[s] = False
        if n_children[e] == 0 and e != 0:
            heapq.heappush(heap, (metric_of(e), min_rank[e], e))

    # rebuild a tree from the surviving arcs
    alive_ids = np.flatnonzero(arc_alive)
    pos_of = np.full(tree.n_arcs, -1, dtype=np.int64)
    pos_of[alive_ids] = np.arange(len(alive_ids))
    root_map = np.array([pos_of[find(a)] for a in range(tree.n_arcs)], dtype=np.int64)
    arc_of_vertex = root_map[tree.arc_of_vertex]
    lower_v = tree.node_vertex[arc_lower[alive_ids]]
    upper_v = tree.node_vertex[arc_upper[alive_ids]]
    _, rank = sweep_order(tree.values)
    return _assemble(tree.grid, tree.values, rank, lower_v, upper_v,
                     arc_of_vertex, tree.direction)


# ---------------------------------------------------------------------------
# diagrams and bottleneck distance

def persistence_diagram(tree: MergeTree) -> np.ndarray:
    """(birth, death) per pair, essential death at the global max."""
    pairing = persistence_pairs(tree)
    vals = tree.node_values
    pts = np.stack([vals[pairing.min_node], vals[pairing.death_node]], axis=1)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    return pts[order]


def bottleneck_distance(d1: np.ndarray, d2: np.ndarray,
                        max_points: int = BOTTLENECK_MAX_POINTS) -> float:
    """Exact bottleneck distance between two persistence diagrams.

    Points may match across diagrams or to their own diagonal projection.
    Solved by bisecting the candidate cost set with a maximum bipartite
    matching feasibility test; diagrams beyond ``max_points`` are refused.
    """
    d1 = np.asarray(d1, dtype=float).reshape(-1, 2)
    d2 = np.asarray(d2, dtype=float).reshape(-1, 2)
    for d in (d1, d2):
        if len(d) and np.any(d[:, 1] < d[:, 0]):
            raise ValidationError("diagram has a death below its birth")
    n, m = len(d1), len(d2)
    if n > max_points or m > max_points:
        raise DiagramTooLargeError(
            f"diagram with {max(n, m)} points exceeds the exact matching "
            f"budget of {max_points}", limit=max_points)
    if n == 0 and m == 0:
        return 0.0
    diag1 = (d1[:, 1] - d1[:, 0]) / 2.0 if n else np.zeros(0)
    diag2 = (d2[:, 1] - d2[:, 0]) / 2.0 if m else np.zeros(0)
    if n and m:
        cross = np.maximum(
            np.abs(d1[:, None, 0] - d2[None, :, 0]),
            np.abs(d1[:, None, 1] - d2[None, :, 1]))
    else:
        cross = np.zeros((n, m))
    candidates = np.unique(np.concatenate([cross.ravel(), diag1, diag2, [0.0]]))

    def feasible(t: float) -> bool:
        # left: d1 points then proxies for d2; right: d2 points then proxies for d1
        rows, cols = [], []
        if n and m:
            rr, cc = np.nonzero(cross <= t)
            rows.extend(rr.tolist())
            cols.extend(cc.tolist())
        for i in np.flatnonzero(diag1 <= t):
            rows.append(int(i))
            cols.append(m + int(i))
        for j in np.flatnonzero(diag2 <= t):
            rows.append(n + int(j))
            cols.append(int(j))
        for j in range(m):          # proxy-proxy matches are free
            for i in range(n):
                rows.append(n + j)
                cols.append(m + i)
        graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                           shape=(n + m, m + n))
        match = maximum_bipartite_matching(graph, perm_type="column")
        return int((match != -1).sum()) == n + m

    lo, hi = 0, len(candidates) - 1
    if not feasible(candidates[hi]):
        raise ValidationError("no feasible matching at maximal cost; malformed diagrams")
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


# ---------------------------------------------------------------------------
# structural validation (used by tests and the service layer)

def validate_tree(tree: MergeTree, simplified: bool = False) -> None:
    """Check the structural invariants; raises ValidationError on failure.

    Simplified trees keep every invariant except the lower end of the arc
    value span: cancelling a branch folds its basin (values reaching down
    to the cancelled minimum) into the surviving sibling arc, which is what
    keeps arc regions connected in the domain.  Pass simplified=True to
    skip that one check.
    """
    n = tree.grid.n_vertices
    if tree.arc_of_vertex.shape != (n,):
        raise ValidationError("arc membership does not cover the grid")
    if np.any(tree.arc_of_vertex < 0) or np.any(tree.arc_of_vertex >= tree.n_arcs):
        raise ValidationError("arc membership references unknown arcs")
    counts = np.bincount(tree.arc_of_vertex, minlength=tree.n_arcs)
    if counts.sum() != n:
        raise ValidationError("arc member lists do not partition the vertices")
    _, rank = sweep_order(tree.values)
    node_rank = rank[tree.node_vertex]
    if np.any(np.diff(node_rank) <= 0):
        raise ValidationError("nodes are not sorted by sweep rank")
    for a in range(tree.n_arcs):
        lo, up = tree.arc_lower[a], tree.arc_upper[a]
        members = tree.arc_members(a)
        if len(members) == 0 and lo != up:
            raise ValidationError(f"arc {a} has no members")
        if len(members):
            mr = rank[members]
            if mr.max() > node_rank[up]:
                raise ValidationError(f"arc {a} member above its upper node")
            if not simplified and mr.min() < node_rank[lo]:
                raise ValidationError(f"arc {a} member below its lower node")
    roots = [i for i in range(tree.n_nodes)
             if tree.up_arc(i) is None]
    if roots != [tree.root]:
        raise ValidationError(f"expected a single root, found {roots}")

"""Independent reference implementations used to check the real ones.

Everything in here is written for clarity over speed: plain loops, explicit
set bookkeeping, brute force enumeration.  Nothing imports the package's
algorithm internals beyond data containers.
"""

from __future__ import annotations

import itertools

import numpy as np


# ---------------------------------------------------------------------------
# eigenvalues via the characteristic polynomial

def eig_sym3_roots(xx, yy, zz, xy, xz, yz):
    """Eigenvalues of one symmetric 3x3 matrix from np.roots, descending."""
    a = np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]], dtype=float)
    # char poly: -l^3 + tr l^2 - m l + det, as coefficients for np.roots
    tr = np.trace(a)
    m = (tr * tr - np.trace(a @ a)) / 2.0
    det = np.linalg.det(a)
    roots = np.roots([1.0, -tr, m, -det])
    vals = np.sort(roots.real)[::-1]
    return float(vals[0]), float(vals[1]), float(vals[2])


# ---------------------------------------------------------------------------
# grid helpers shared by the slower oracles

def neighbor_ids(grid, i):
    """Neighbour vertex ids computed directly from coordinates."""
    nx, ny, nz = grid.dims
    z, rem = divmod(i, nx * ny)
    y, x = divmod(rem, nx)
    out = []
    for dx, dy, dz in grid.offsets():
        xx, yy, zz = x + dx, y + dy, z + dz
        if 0 <= xx < nx and 0 <= yy < ny and 0 <= zz < nz:
            out.append(int(xx + nx * (yy + ny * zz)))
    return out


def components_of(vertex_set, grid):
    """Connected components of a vertex id set, as a list of frozensets."""
    todo = set(vertex_set)
    comps = []
    while todo:
        seed = next(iter(todo))
        comp = {seed}
        frontier = [seed]
        todo.discard(seed)
        while frontier:
            v = frontier.pop()
            for nb in neighbor_ids(grid, v):
                if nb in todo:
                    todo.discard(nb)
                    comp.add(nb)
                    frontier.append(nb)
        comps.append(frozenset(comp))
    return comps


def sublevel_components(values, grid, level, strict=False):
    """Components of {h <= level} (or {h < level}) by scratch BFS."""
    if strict:
        keep = [i for i in range(len(values)) if values[i] < level]
    else:
        keep = [i for i in range(len(values)) if values[i] <= level]
    return components_of(keep, grid)


# ---------------------------------------------------------------------------
# sub-level set tracking: an explicit-event merge tree

class TrackedTree:
    """Merge tree produced by per-vertex component tracking.

    Arcs are dicts with lower/upper vertex ids and a member list; pairs are
    (minimum vertex, death vertex, persistence) with the essential pair
    carrying the global max as death.
    """

    def __init__(self):
        self.arcs = []          # {lower, upper, members}
        self.pairs = []         # (min_vertex, death_vertex)
        self.node_vertices = set()
        self.root_vertex = None
        self.minima = []
        self.arc_of = {}        # vertex -> arc index


def track_merge_tree(values, grid, record_levels=False):
    """Track sub-level components one vertex at a time, in sweep order.

    Ties broken by vertex index, matching the sweep convention.  Keeps every
    component as an explicit Python set so the bookkeeping shares nothing
    with the union-find implementation.  With record_levels=True the tree
    carries a snapshot of the component sets after each distinct value, for
    cross-checking against scratch BFS.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    order = sorted(range(n), key=lambda i: (values[i], i))
    rank = {v: p for p, v in enumerate(order)}

    comps = {}        # component id -> set of vertices
    comp_min = {}     # component id -> its oldest minimum vertex
    comp_arc = {}     # component id -> currently open arc index
    where = {}        # vertex -> component id
    next_comp = itertools.count()

    t = TrackedTree()
    t.level_snapshots = {}

    for pos, v in enumerate(order):
        nb_comps = []
        for nb in neighbor_ids(grid, v):
            if rank.get(nb, n) < pos:
                cid = where[nb]
                if cid not in nb_comps:
                    nb_comps.append(cid)
        if not nb_comps:
            cid = next(next_comp)
            comps[cid] = {v}
            comp_min[cid] = v
            aidx = len(t.arcs)
            t.arcs.append({"lower": v, "upper": None, "members": [v]})
            comp_arc[cid] = aidx
            where[v] = cid
            t.arc_of[v] = aidx
            t.minima.append(v)
            t.node_vertices.add(v)
        elif len(nb_comps) == 1:
            cid = nb_comps[0]
            comps[cid].add(v)
            where[v] = cid
            aidx = comp_arc[cid]
            t.arcs[aidx]["members"].append(v)
            t.arc_of[v] = aidx
        else:
            # merge event: v is a saddle (or the final root)
            t.node_vertices.add(v)
            elder = min(nb_comps, key=lambda c: rank[comp_min[c]])
            for cid in nb_comps:
                t.arcs[comp_arc[cid]]["upper"] = v
                if cid != elder:
                    t.pairs.append((comp_min[cid], v))
            merged = set()
            for cid in nb_comps:
                merged |= comps.pop(cid)
                if cid != elder:
                    comp_min.pop(cid)
                    comp_arc.pop(cid)
            merged.add(v)
            newc = next(next_comp)
            comps[newc] = merged
            comp_min[newc] = comp_min.pop(elder)
            for w in merged:
                where[w] = newc
            if pos == n - 1:
                # merging at the global max: v tops out the elder arc itself
                aidx = comp_arc.pop(elder)
                t.arcs[aidx]["members"].append(v)
                t.arc_of[v] = aidx
                comp_arc[newc] = aidx
            else:
                comp_arc.pop(elder)
                aidx = len(t.arcs)
                t.arcs.append({"lower": v, "upper": None, "members": [v]})
                comp_arc[newc] = aidx
                t.arc_of[v] = aidx
        if record_levels and (pos == n - 1 or values[order[pos + 1]] != values[v]):
            t.level_snapshots[float(values[v])] = sorted(
                (frozenset(c) for c in comps.values()), key=min)

    assert len(comps) == 1, "grid should be connected"
    last = order[-1]
    t.root_vertex = last
    t.node_vertices.add(last)
    (last_cid,) = comps.keys()
    open_arc = comp_arc[last_cid]
    if t.arcs[open_arc]["upper"] is None:
        t.arcs[open_arc]["upper"] = last
    gmin = comp_min[last_cid]
    t.pairs.append((gmin, last))
    return t


def tracked_pairs_with_persistence(t, values):
    return sorted((m, d, float(values[d] - values[m])) for m, d in t.pairs)


# ---------------------------------------------------------------------------
# brute force bottleneck distance

def bottleneck_brute(d1, d2):
    """Exact bottleneck distance by enumerating all matchings.

    Only viable for a handful of points.  Each point may match a point of
    the other diagram or its own diagonal projection.
    """
    d1 = [tuple(p) for p in np.atleast_2d(np.asarray(d1, float)) if len(p)] if len(d1) else []
    d2 = [tuple(p) for p in np.atleast_2d(np.asarray(d2, float)) if len(p)] if len(d2) else []

    def diag_cost(p):
        return (p[1] - p[0]) / 2.0

    def pair_cost(p, q):
        return max(abs(p[0] - q[0]), abs(p[1] - q[1]))

    n, m = len(d1), len(d2)
    best = float("inf")
    # choose which subset of d1 matches into d2 (injectively), rest go diagonal
    idx2 = list(range(m))
    for k in range(0, min(n, m) + 1):
        for sub1 in itertools.combinations(range(n), k):
            for sub2 in itertools.permutations(idx2, k):
                cost = 0.0
                for i, j in zip(sub1, sub2):
                    cost = max(cost, pair_cost(d1[i], d2[j]))
                matched2 = set(sub2)
                for i in range(n):
                    if i not in sub1:
                        cost = max(cost, diag_cost(d1[i]))
                for j in range(m):
                    if j not in matched2:
                        cost = max(cost, diag_cost(d2[j]))
                best = min(best, cost)
    return best


# ---------------------------------------------------------------------------
# brute force sparse coding

def omp_brute(D, x, t0):
    """Best coefficients over every support of size <= t0, by least squares."""
    m, k = D.shape
    best_err = float("inf")
    best = np.zeros(k)
    for size in range(0, t0 + 1):
        for support in itertools.combinations(range(k), size):
            if size == 0:
                resid = float(np.linalg.norm(x))
                coef = np.zeros(0)
            else:
                sub = D[:, list(support)]
                coef, _, _, _ = np.linalg.lstsq(sub, x, rcond=None)
                resid = float(np.linalg.norm(x - sub @ coef))
            if resid < best_err - 1e-12:
                best_err = resid
                best = np.zeros(k)
                for c, j in zip(coef, support):
                    best[j] = c
    return best, best_err


# ---------------------------------------------------------------------------
# local minima directly from the definition

def local_minima(values, grid):
    """Vertices strictly below all neighbours under (value, index) order."""
    values = np.asarray(values, dtype=float)
    out = []
    for v in range(len(values)):
        key = (values[v], v)
        if all(key < (values[nb], nb) for nb in neighbor_ids(grid, v)):
            out.append(v)
    return out

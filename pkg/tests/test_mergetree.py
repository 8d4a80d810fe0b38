import numpy as np
import pytest

from timt.errors import DiagramTooLargeError, ValidationError
from timt.fields import ScalarField
from timt.grid import GridSpec
from timt.mergetree import (
    KIND_LEAF,
    KIND_ROOT,
    KIND_SADDLE,
    MergeTree,
    bottleneck_distance,
    branch_decomposition,
    compute_merge_tree,
    hypervolume_per_pair,
    persistence_diagram,
    persistence_pairs,
    simplify,
    validate_tree,
)

import oracles


def path_field(vals):
    g = GridSpec((len(vals), 1, 1))
    return ScalarField(g, np.asarray(vals, dtype=float))


def tree_signature(t: MergeTree):
    """Comparable structural summary: nodes, pairs, arcs with members."""
    nodes = {(int(t.node_vertex[i]), t.node_kind[i]) for i in range(t.n_nodes)}
    p = persistence_pairs(t)
    pairs = sorted((int(t.node_vertex[m]), int(t.node_vertex[d]), float(pp))
                   for m, d, pp in zip(p.min_node, p.death_node, p.persistence))
    arcs = sorted(
        (int(t.node_vertex[t.arc_lower[a]]), int(t.node_vertex[t.arc_upper[a]]),
         tuple(sorted(int(v) for v in t.arc_members(a))))
        for a in range(t.n_arcs))
    return nodes, pairs, arcs


def oracle_signature(ot, values):
    minima = set(ot.minima)
    nodes = set()
    for v in ot.node_vertices:
        if v in minima and v != ot.root_vertex:
            nodes.add((v, KIND_LEAF))
        elif v == ot.root_vertex:
            kind = KIND_LEAF if v in minima else KIND_ROOT
            nodes.add((v, kind))
        else:
            nodes.add((v, KIND_SADDLE))
    pairs = sorted(oracles.tracked_pairs_with_persistence(ot, values))
    arcs = sorted(
        (a["lower"], a["upper"], tuple(sorted(a["members"])))
        for a in ot.arcs)
    return nodes, pairs, arcs


# ---------------------------------------------------------------------------
# frozen fixtures

def test_hand_traced_path_fixture():
    t = compute_merge_tree(path_field([0.0, 2.0, 1.0, 3.0]))
    validate_tree(t)
    assert list(t.node_vertex) == [0, 2, 1, 3]
    assert t.node_kind == [KIND_LEAF, KIND_LEAF, KIND_SADDLE, KIND_ROOT]
    nodes, pairs, arcs = tree_signature(t)
    assert pairs == [(0, 3, 3.0), (2, 1, 1.0)]
    assert arcs == [(0, 1, (0,)), (1, 3, (1, 3)), (2, 1, (2,))]


def test_monotone_field_single_leaf():
    t = compute_merge_tree(path_field([1.0, 2.0, 3.0, 4.0, 5.0]))
    validate_tree(t)
    assert t.node_kind.count(KIND_LEAF) == 1
    assert t.node_kind.count(KIND_SADDLE) == 0
    assert t.n_arcs == 1
    assert len(t.arc_members(0)) == 5


def test_constant_field_tie_rule():
    t = compute_merge_tree(path_field([2.0] * 6))
    validate_tree(t)
    leaves = t.leaves()
    assert len(leaves) == 1
    assert t.node_vertex[leaves[0]] == 0  # index tie rule picks vertex 0
    assert t.n_arcs == 1


def test_single_vertex_grid():
    g = GridSpec((1, 1, 1))
    t = compute_merge_tree(ScalarField(g, np.array([5.0])))
    validate_tree(t)
    assert t.n_nodes == 1 and t.n_arcs == 1
    p = persistence_pairs(t)
    assert len(p) == 1 and p.persistence[0] == 0.0 and p.essential[0]


def test_equal_minima_elder_by_index():
    # two symmetric wells with equal depth; vertex index decides the elder
    t = compute_merge_tree(path_field([1.0, 3.0, 1.0]))
    p = persistence_pairs(t)
    assert int(t.node_vertex[p.min_node[0]]) == 0      # essential keeps vertex 0
    assert int(t.node_vertex[p.min_node[1]]) == 2
    assert p.persistence[1] == 2.0


def test_merge_at_global_max():
    # the highest vertex itself joins two components: no arc above the root
    t = compute_merge_tree(path_field([0.0, 1.0, 1.0, 0.5]))
    validate_tree(t)
    assert t.node_kind[t.root] == KIND_ROOT
    root_children = t.child_arcs(t.root)
    assert len(root_children) == 2
    nodes, pairs, arcs = tree_signature(t)
    assert (0, 2, (0, 1, 2)) in arcs or (0, 2, (0, 1)) in arcs


def test_superlevel_direction_negates():
    h = path_field([0.0, 2.0, 1.0, 3.0])
    t = compute_merge_tree(h, direction="superlevel")
    validate_tree(t)
    # leaves of the superlevel tree sit at maxima of h
    leaf_vs = {int(t.node_vertex[i]) for i in t.leaves()}
    assert leaf_vs == {1, 3}
    with pytest.raises(ValidationError):
        compute_merge_tree(h, direction="sideways")


# ---------------------------------------------------------------------------
# oracle equivalence

@pytest.mark.parametrize("connectivity", ["face6", "vertex26"])
def test_matches_component_tracking_oracle(connectivity):
    rng = np.random.default_rng(100)
    for trial in range(25):
        g = GridSpec((5, 4, 3), connectivity=connectivity)
        vals = rng.integers(0, 8, size=g.n_vertices).astype(float)
        t = compute_merge_tree(ScalarField(g, vals))
        validate_tree(t)
        ot = oracles.track_merge_tree(vals, g)
        assert tree_signature(t) == oracle_signature(ot, vals)


def test_tracker_agrees_with_scratch_bfs_levels():
    rng = np.random.default_rng(101)
    g = GridSpec((4, 4, 2))
    vals = rng.integers(0, 5, size=g.n_vertices).astype(float)
    ot = oracles.track_merge_tree(vals, g, record_levels=True)
    for level, snapshot in ot.level_snapshots.items():
        scratch = sorted(oracles.sublevel_components(vals, g, level), key=min)
        assert snapshot == scratch


def test_leaf_count_equals_local_minima():
    rng = np.random.default_rng(102)
    for conn in ("face6", "vertex26"):
        g = GridSpec((6, 5, 2), connectivity=conn)
        vals = rng.normal(size=g.n_vertices)
        t = compute_merge_tree(ScalarField(g, vals))
        assert len(t.leaves()) == len(oracles.local_minima(vals, g))
        p = persistence_pairs(t)
        assert len(p) == len(t.leaves())


def test_persistence_sum_invariant_under_mirror_relabeling():
    rng = np.random.default_rng(103)
    g = GridSpec((6, 5, 1))
    vals = rng.permutation(g.n_vertices).astype(float)  # distinct values
    t = compute_merge_tree(ScalarField(g, vals))
    total = float(persistence_pairs(t).persistence.sum())
    # mirror the grid in x: an adjacency-preserving relabeling
    nx, ny, _ = g.dims
    mirrored = vals.reshape(1, ny, nx)[:, :, ::-1].ravel()
    tm = compute_merge_tree(ScalarField(g, mirrored))
    assert float(persistence_pairs(tm).persistence.sum()) == pytest.approx(total)


# ---------------------------------------------------------------------------
# simplification

def test_simplify_identity_and_full():
    h = path_field([0.0, 2.0, 1.0, 3.0])
    t = compute_merge_tree(h)
    t0 = simplify(t, "persistence", 0.0)
    assert tree_signature(t0) == tree_signature(t)
    tinf = simplify(t, "persistence", np.inf)
    validate_tree(tinf, simplified=True)
    assert tinf.n_arcs == 1
    assert len(tinf.arc_members(0)) == 4
    assert tinf.node_kind == [KIND_LEAF, KIND_ROOT]


def test_simplify_hand_traced_cancellation():
    t = compute_merge_tree(path_field([0.0, 2.0, 1.0, 3.0]))
    st = simplify(t, "persistence", 1.5)
    validate_tree(st, simplified=True)
    nodes, pairs, arcs = tree_signature(st)
    assert pairs == [(0, 3, 3.0)]
    assert arcs == [(0, 3, (0, 1, 2, 3))]


def test_simplify_keeps_partition_and_threshold_postcondition():
    rng = np.random.default_rng(104)
    for trial in range(10):
        g = GridSpec((7, 6, 1), connectivity="edge4")
        vals = rng.normal(size=g.n_vertices)
        t = compute_merge_tree(ScalarField(g, vals))
        th = float(rng.uniform(0.2, 1.5))
        st = simplify(t, "persistence", th)
        validate_tree(st, simplified=True)
        assert np.bincount(st.arc_of_vertex, minlength=st.n_arcs).sum() == g.n_vertices
        p = persistence_pairs(st)
        assert np.all(p.persistence[~p.essential] >= th)
        # survivors are exactly the original pairs at or above the threshold
        orig = persistence_pairs(t)
        want = int(np.sum(orig.persistence[~orig.essential] >= th)) + 1
        assert len(p) == want


def test_simplify_monotone_composition():
    rng = np.random.default_rng(105)
    for metric in ("persistence", "hypervolume"):
        g = GridSpec((6, 6, 1))
        vals = rng.normal(size=g.n_vertices)
        t = compute_merge_tree(ScalarField(g, vals))
        t1, t2 = sorted(rng.uniform(0.1, 2.0, size=2))
        a = simplify(t, metric, t2)
        b = simplify(simplify(t, metric, t1), metric, t2)
        assert tree_signature(a) == tree_signature(b)


def test_simplify_hypervolume_absorption():
    # a wide shallow well: hypervolume exceeds bare persistence
    vals = [0.0, 5.0, 2.1, 2.0, 2.2, 2.4, 2.6, 2.8, 6.0]
    t = compute_merge_tree(path_field(vals))
    hv = hypervolume_per_pair(t)
    p = persistence_pairs(t)
    wide = [i for i in range(len(p)) if t.node_vertex[p.min_node[i]] == 3][0]
    assert hv[wide] == pytest.approx(6 * 3.0)  # six members, persistence 3
    assert hv[wide] > p.persistence[wide]
    st = simplify(t, "hypervolume", float(hv[wide]) + 1e-9)
    validate_tree(st, simplified=True)
    assert st.n_arcs == 1  # everything folds into the essential branch


# ---------------------------------------------------------------------------
# branch decomposition

def test_branch_decomposition_star():
    # four wells around a centre saddle region in 2D
    g = GridSpec((5, 5, 1))
    vals = np.full(g.n_vertices, 5.0)
    wells = [(0, 0), (4, 0), (0, 4), (4, 4)]
    for k, (x, y) in enumerate(wells):
        vals[g.vertex_index(x, y, 0)] = float(k)
    t = compute_merge_tree(ScalarField(g, vals))
    bd = branch_decomposition(t)
    assert len(bd) == 4
    root_branch = bd.branches[0]
    assert root_branch.parent is None
    assert sorted(root_branch.children) == [1, 2, 3]
    assert all(bd.branches[i].parent == 0 for i in (1, 2, 3))


def test_branch_parent_persistence_dominates():
    rng = np.random.default_rng(106)
    for _ in range(10):
        g = GridSpec((5, 5, 2), connectivity="vertex26")
        vals = rng.normal(size=g.n_vertices)
        t = compute_merge_tree(ScalarField(g, vals))
        bd = branch_decomposition(t)
        assert np.bincount(bd.branch_of_arc, minlength=len(bd)).sum() == t.n_arcs
        for i, b in enumerate(bd.branches):
            if b.parent is not None:
                assert bd.branches[b.parent].persistence >= b.persistence - 1e-12
        # branches partition the arcs
        claimed = [a for b in bd.branches for a in b.arc_ids]
        assert sorted(claimed) == list(range(t.n_arcs))


def test_branch_single_leaf_tree():
    t = compute_merge_tree(path_field([3.0, 4.0, 9.0]))
    bd = branch_decomposition(t)
    assert len(bd) == 1
    assert bd.branches[0].parent is None and bd.branches[0].children == ()


# ---------------------------------------------------------------------------
# hypervolume

def test_hypervolume_frozen_and_recount():
    # side well with exactly 5 members (vertices 2..6) dying at the value-5 saddle
    vals = [0.0, 5.0, 3.0, 3.1, 3.2, 3.3, 3.4, 6.0]
    t = compute_merge_tree(path_field(vals))
    p = persistence_pairs(t)
    hv = hypervolume_per_pair(t, p)
    bd = branch_decomposition(t)
    bov = bd.branch_of_vertex(t)
    for i in range(len(p)):
        count = int((bov == i).sum())
        assert hv[i] == pytest.approx(count * p.persistence[i])
    side = [i for i in range(len(p)) if t.node_vertex[p.min_node[i]] == 2][0]
    assert int((bov == side).sum()) == 5 and p.persistence[side] == pytest.approx(2.0)
    assert hv[side] == pytest.approx(10.0)


def test_hypervolume_zero_persistence_pair():
    # a second minimum whose merge saddle shares its value: persistence 0
    g = GridSpec((3, 2, 1))
    vals = np.array([0.5, 5.0, 0.5,
                     0.5, 0.5, 0.5])
    t = compute_merge_tree(ScalarField(g, vals))
    p = persistence_pairs(t)
    hv = hypervolume_per_pair(t)
    zero = [i for i in range(len(p)) if p.persistence[i] == 0.0]
    assert zero and all(hv[i] == 0.0 for i in zero)


def test_hypervolume_matches_membership_recount_random():
    rng = np.random.default_rng(107)
    g = GridSpec((6, 4, 2))
    vals = rng.integers(0, 9, size=g.n_vertices).astype(float)
    t = compute_merge_tree(ScalarField(g, vals))
    hv = hypervolume_per_pair(t)
    # independent recount through the oracle tree's arc membership
    ot = oracles.track_merge_tree(vals, g)
    sig_impl = tree_signature(t)
    sig_orac = oracle_signature(ot, vals)
    assert sig_impl == sig_orac
    p = persistence_pairs(t)
    bd = branch_decomposition(t)
    for i, b in enumerate(bd.branches):
        members = sum(len(t.arc_members(a)) for a in b.arc_ids)
        assert hv[i] == pytest.approx(members * b.persistence)


# ---------------------------------------------------------------------------
# diagrams and bottleneck

def test_diagram_contents():
    t = compute_merge_tree(path_field([0.0, 2.0, 1.0, 3.0]))
    d = persistence_diagram(t)
    assert d.tolist() == [[0.0, 3.0], [1.0, 2.0]]


def test_bottleneck_identity_and_diagonal():
    d = np.array([[0.0, 3.0], [1.0, 2.0]])
    assert bottleneck_distance(d, d) == 0.0
    assert bottleneck_distance(np.array([[0.0, 1.0]]), np.zeros((0, 2))) == pytest.approx(0.5)
    assert bottleneck_distance(np.zeros((0, 2)), np.zeros((0, 2))) == 0.0


def test_bottleneck_matches_brute_force():
    rng = np.random.default_rng(108)
    for trial in range(40):
        n1 = int(rng.integers(0, 5))
        n2 = int(rng.integers(0, 5))
        def mk(n):
            b = rng.uniform(0, 2, size=n)
            d = b + rng.uniform(0, 2, size=n)
            return np.stack([b, d], axis=1) if n else np.zeros((0, 2))
        d1, d2 = mk(n1), mk(n2)
        got = bottleneck_distance(d1, d2)
        want = oracles.bottleneck_brute(d1, d2)
        assert got == pytest.approx(want, abs=1e-12)


def test_bottleneck_limits_and_validation():
    big = np.stack([np.zeros(70), np.ones(70)], axis=1)
    with pytest.raises(DiagramTooLargeError) as ei:
        bottleneck_distance(big, big)
    assert ei.value.details["limit"] == 64
    with pytest.raises(ValidationError):
        bottleneck_distance(np.array([[1.0, 0.0]]), np.zeros((0, 2)))


def test_diagram_stability_surrogate():
    rng = np.random.default_rng(109)
    g = GridSpec((5, 5, 1))
    for _ in range(15):
        h1 = rng.normal(size=g.n_vertices)
        h2 = h1 + rng.normal(scale=0.1, size=g.n_vertices)
        t1 = compute_merge_tree(ScalarField(g, h1))
        t2 = compute_merge_tree(ScalarField(g, h2))
        db = bottleneck_distance(persistence_diagram(t1), persistence_diagram(t2))
        sup = float(np.abs(h1 - h2).max())
        assert db <= sup + 1e-9

import numpy as np
import pytest

from timt.errors import ValidationError
from timt.grid import GridSpec, canonical_connectivity, slice_plane


def test_vertex_indexing_is_x_fastest():
    g = GridSpec((4, 3, 2))
    # walk indices in storage order and check coordinates round trip
    i = 0
    for z in range(2):
        for y in range(3):
            for x in range(4):
                assert g.vertex_index(x, y, z) == i
                assert g.vertex_coords(i) == (x, y, z)
                i += 1
    assert g.n_vertices == 24


def test_index_validation():
    g = GridSpec((4, 3, 2))
    with pytest.raises(ValidationError):
        g.vertex_index(4, 0, 0)
    with pytest.raises(ValidationError):
        g.vertex_coords(24)
    with pytest.raises(ValidationError):
        GridSpec((0, 3, 2))
    with pytest.raises(ValidationError):
        GridSpec((4, 3, 2), spacing=(1.0, 0.0, 1.0))


def test_connectivity_aliases_normalise_by_dimensionality():
    assert canonical_connectivity("face6", 1) == "edge4"
    assert canonical_connectivity("edge4", 4) == "face6"
    assert canonical_connectivity("vertex26", 1) == "vertex8"
    assert canonical_connectivity("vertex8", 4) == "vertex26"
    with pytest.raises(ValidationError):
        canonical_connectivity("knight", 4)
    g2 = GridSpec((5, 5, 1), connectivity="vertex26")
    assert g2.connectivity == "vertex8"


def test_neighbor_counts_interior_and_corner():
    g = GridSpec((4, 4, 4), connectivity="face6")
    interior = g.vertex_index(2, 2, 2)
    corner = g.vertex_index(0, 0, 0)
    assert len(g.neighbors(interior)) == 6
    assert len(g.neighbors(corner)) == 3
    gf = g.with_connectivity("vertex26")
    assert len(gf.neighbors(interior)) == 26
    assert len(gf.neighbors(corner)) == 7
    g2 = GridSpec((4, 4, 1), connectivity="edge4")
    assert len(g2.neighbors(g2.vertex_index(2, 2, 0))) == 4
    g2f = g2.with_connectivity("vertex8")
    assert len(g2f.neighbors(g2f.vertex_index(2, 2, 0))) == 8


def test_neighbors_are_symmetric():
    rng = np.random.default_rng(7)
    for conn in ("face6", "vertex26"):
        g = GridSpec((3, 4, 2), connectivity=conn)
        for _ in range(20):
            v = int(rng.integers(g.n_vertices))
            for nb in g.neighbors(v):
                assert v in g.neighbors(int(nb))


def test_slice_plane_shapes_and_content():
    g = GridSpec((4, 3, 2))
    vals = np.arange(24, dtype=float)
    plz = slice_plane(vals, g, "z", 1)
    assert plz.shape == (3, 4)
    assert plz[0, 0] == g.vertex_index(0, 0, 1)
    ply = slice_plane(vals, g, "y", 2)
    assert ply.shape == (2, 4)
    assert ply[1, 3] == g.vertex_index(3, 2, 1)
    plx = slice_plane(vals, g, "x", 0)
    assert plx.shape == (2, 3)
    assert plx[0, 2] == g.vertex_index(0, 2, 0)
    with pytest.raises(ValidationError):
        slice_plane(vals, g, "z", 2)
    with pytest.raises(ValidationError):
        slice_plane(vals, g, "w", 0)


def test_ndimage_structure_matches_offsets():
    for conn in ("face6", "vertex26"):
        g = GridSpec((3, 3, 3), connectivity=conn)
        s = g.ndimage_structure()
        count = int(s.sum()) - 1
        assert count == len(g.offsets())

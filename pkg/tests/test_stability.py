import numpy as np
import pytest
from scipy import ndimage

from timt.errors import GridMismatchError
from timt.fields import Channel, MultiField, ScalarField
from timt.grid import GridSpec
from timt.stability import StabilityReport, sup_norm_diff, verify_stability_chain
from timt.traits import BoxTrait, Leaf, PointTrait


def smooth_multifield(rng, dims=(8, 8, 8), n_channels=3, sigma=1.5):
    g = GridSpec(dims)
    nx, ny, nz = dims
    chans = []
    for i in range(n_channels):
        raw = rng.normal(size=(nz, ny, nx))
        sm = ndimage.gaussian_filter(raw, sigma=sigma)
        chans.append(Channel(f"ch{i}", sm.ravel()))
    return MultiField(g, tuple(chans))


def random_point_pair(rng, mf, spread=2.0):
    names = tuple(mf.channel_names)
    c1 = rng.uniform(-spread, spread, len(names))
    c2 = rng.uniform(-spread, spread, len(names))
    return (Leaf(PointTrait(names, tuple(c1))),
            Leaf(PointTrait(names, tuple(c2))),
            float(np.linalg.norm(c1 - c2)))


def test_sup_norm_identity_and_shift():
    g = GridSpec((4, 3, 2))
    vals = np.arange(24, dtype=np.float64)
    h = ScalarField(g, vals, "generic")
    assert sup_norm_diff(h, h) == 0.0
    shifted = ScalarField(g, vals - 2.5, "generic")
    assert sup_norm_diff(h, shifted) == 2.5
    other = ScalarField(GridSpec((24, 1, 1)), vals, "generic")
    with pytest.raises(GridMismatchError):
        sup_norm_diff(h, other)


def test_sup_norm_matches_elementwise_oracle():
    rng = np.random.default_rng(2)
    g = GridSpec((5, 4, 3))
    a = ScalarField(g, rng.normal(size=60), "generic")
    b = ScalarField(g, rng.normal(size=60), "generic")
    expect = max(abs(x - y) for x, y in zip(a.values, b.values))
    assert sup_norm_diff(a, b) == pytest.approx(expect, abs=0)
    assert sup_norm_diff(a, b) == sup_norm_diff(b, a)


def test_identical_traits_give_zero_chain():
    rng = np.random.default_rng(5)
    mf = smooth_multifield(rng)
    t, _, _ = random_point_pair(rng, mf)
    rep = verify_stability_chain(t, t, mf)
    assert rep.d_hausdorff == 0.0
    assert rep.sup_diff == 0.0
    assert rep.d_bottleneck == 0.0
    assert rep.chain_ok and rep.diagram_ok and rep.field_ok
    assert rep.hausdorff_exact


def test_point_traits_sup_bounded_by_trait_distance():
    rng = np.random.default_rng(11)
    for _ in range(25):
        mf = smooth_multifield(rng, dims=(6, 5, 4), n_channels=2)
        t1, t2, dist = random_point_pair(rng, mf)
        rep = verify_stability_chain(t1, t2, mf)
        assert rep.hausdorff_exact
        assert rep.d_hausdorff == pytest.approx(dist, abs=1e-12)
        assert rep.sup_diff <= dist + 1e-9
        assert rep.d_bottleneck <= rep.sup_diff + 1e-9
        assert rep.chain_ok


def test_chain_is_symmetric():
    rng = np.random.default_rng(19)
    mf = smooth_multifield(rng, dims=(6, 6, 3), n_channels=2)
    t1, t2, _ = random_point_pair(rng, mf)
    a = verify_stability_chain(t1, t2, mf)
    b = verify_stability_chain(t2, t1, mf)
    assert a.sup_diff == b.sup_diff
    assert a.d_bottleneck == b.d_bottleneck
    assert a.d_hausdorff == pytest.approx(b.d_hausdorff, abs=1e-12)
    assert a.chain_ok == b.chain_ok


def test_sampled_traits_use_step_slack():
    rng = np.random.default_rng(23)
    mf = smooth_multifield(rng, dims=(6, 5, 4), n_channels=2)
    names = tuple(mf.channel_names)
    b1 = Leaf(BoxTrait(names, ((-0.5, 0.5), (-0.5, 0.5))))
    b2 = Leaf(BoxTrait(names, ((-0.1, 0.9), (-0.3, 0.7))))
    rep = verify_stability_chain(b1, b2, mf)
    assert not rep.hausdorff_exact
    assert rep.sample_step is not None and rep.sample_step > 0
    assert rep.diagram_ok
    assert rep.field_ok
    assert rep.chain_ok


def test_report_dict_round_trip():
    rep = StabilityReport(1.0, True, None, 0.5, 0.25, 1e-9, True, True, True)
    d = rep.as_dict()
    assert d["chain_ok"] is True
    assert set(d) == {"d_hausdorff", "hausdorff_exact", "sample_step",
                      "sup_diff", "d_bottleneck", "tol", "diagram_ok",
                      "field_ok", "chain_ok"}

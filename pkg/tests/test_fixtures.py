import numpy as np
import pytest

from timt.errors import ValidationError
from timt.fields import ScalarField
from timt.fixtures import FIXTURE_KINDS, generate_fixture
from timt.mergetree import compute_merge_tree


def test_crossing_stripes_has_three_classes_and_label_channel():
    mf = generate_fixture("crossing_stripes_2d")
    assert mf.grid.dims == (64, 64, 1)
    lab = mf.channel("label").values
    assert sorted(set(lab.tolist())) == [0.0, 1.0, 2.0]
    assert mf.n_channels == 61  # 60 signal channels plus the label


def test_crossing_stripes_crossing_region_is_class_one():
    mf = generate_fixture("crossing_stripes_2d", {"noise": 0.0})
    lab = mf.channel("label").values.reshape(64, 64)
    assert lab[30, 30] == 1.0      # inside both bands
    assert lab[30, 5] == 2.0       # horizontal band only
    assert lab[5, 30] == 1.0       # vertical band only
    assert lab[5, 5] == 0.0


def test_crossing_stripes_signatures_are_separated():
    mf = generate_fixture("crossing_stripes_2d", {"noise": 0.0})
    m = mf.matrix([n for n in mf.channel_names if n != "label"])
    lab = mf.channel("label").values.reshape(64, 64)
    sig = m.reshape(60, 64, 64)
    v_bg = sig[:, 5, 5]
    v_a = sig[:, 5, 30]
    v_b = sig[:, 30, 5]
    assert abs(np.dot(v_bg, v_a)) < 1e-10
    assert abs(np.dot(v_a, v_b)) < 1e-10
    cross = sig[:, 30, 30]
    # the crossing mixes A with an attenuated B
    assert np.dot(cross, v_a) == pytest.approx(1.0)
    assert np.dot(cross, v_b) == pytest.approx(0.45)
    assert lab[30, 30] == 1.0


@pytest.mark.parametrize("kind", FIXTURE_KINDS)
def test_same_seed_same_payload(kind):
    a = generate_fixture(kind, seed=11)
    b = generate_fixture(kind, seed=11)
    assert a.channel_names == b.channel_names
    for ca, cb in zip(a.channels, b.channels):
        assert np.array_equal(ca.values, cb.values)


def test_different_seed_changes_noisy_channels():
    a = generate_fixture("crossing_stripes_2d", seed=0)
    b = generate_fixture("crossing_stripes_2d", seed=1)
    assert not np.array_equal(a.channels[0].values, b.channels[0].values)


def test_two_blob_has_exactly_two_minima():
    mf = generate_fixture("two_blob_3d")
    tree = compute_merge_tree(ScalarField(mf.grid, mf.channel("blobs").values))
    assert len(tree.leaves()) == 2


def test_tensor_block_emits_six_tensor_channels():
    mf = generate_fixture("tensor_block")
    assert mf.channel_names == ["sxx", "syy", "szz", "sxy", "sxz", "syz"]
    assert np.all(np.isfinite(mf.matrix()))


def test_unknown_kind_and_bad_params_rejected():
    with pytest.raises(ValidationError):
        generate_fixture("nope")
    with pytest.raises(ValidationError):
        generate_fixture("two_blob_3d", {"bogus": 1})
    with pytest.raises(ValidationError):
        generate_fixture("crossing_stripes_2d", {"stripe_lo": 50, "stripe_hi": 10})
    with pytest.raises(ValidationError):
        generate_fixture("tensor_block", {"epsilon": 0.0})

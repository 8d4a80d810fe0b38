import json
import subprocess
import sys

import numpy as np
import pytest

from timt import formats
from timt.cli import main
from timt.fields import ScalarField
from timt.grid import GridSpec
from timt.stability import StabilityReport


def run_cli(*argv):
    return main([str(a) for a in argv])


def write_trait(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc))
    return path


def signature_point_trait(ds_dir, channels=("sig00", "sig01", "sig02")):
    """Point trait at the stripe-A signature restricted to a few channels."""
    mf = formats.load_dataset(ds_dir)
    lab = mf.channel("label").values
    v = mf.matrix(list(channels))[:, lab == 1.0].mean(axis=1)
    return {"kind": "point", "channels": list(channels),
            "coords": [float(c) for c in v]}


def test_end_to_end_crown_pipeline(tmp_path, capsys):
    ds = tmp_path / "ds"
    assert run_cli("fixture", "crossing_stripes_2d", "--out", ds) == 0
    trait = write_trait(tmp_path / "t.json", signature_point_trait(ds))
    assert run_cli("trait-eval", ds, trait, "--out", tmp_path / "field") == 0
    assert run_cli("mt", tmp_path / "field", "--out", tmp_path / "tree") == 0
    assert run_cli("segment", tmp_path / "field", "--tree", tmp_path / "tree",
                   "--method", "crown", "--delta", "0.2",
                   "--out", tmp_path / "seg") == 0
    doc = json.loads((tmp_path / "seg" / "segmentation.json").read_text())
    assert len(doc["segments"]) >= 1
    assert (tmp_path / "seg" / "run.json").exists()


def test_segment_usage_errors_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("segment", tmp_path / "nowhere", "--method", "subtrees",
                "--out", tmp_path / "s")
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run_cli("segment", tmp_path / "nowhere", "--method", "crown",
                "--out", tmp_path / "s")
    assert exc.value.code == 2
    capsys.readouterr()


def test_mt_micro_fixture_two_leaves_one_saddle(tmp_path):
    grid = GridSpec((4, 1, 1))
    formats.save_field(ScalarField(grid, np.array([0.0, 2.0, 1.0, 3.0])),
                       tmp_path / "f")
    assert run_cli("mt", tmp_path / "f", "--out", tmp_path / "t") == 0
    doc = json.loads((tmp_path / "t" / "tree.json").read_text())
    kinds = [n["kind"] for n in doc["nodes"]]
    assert kinds.count("leaf-minimum") == 2
    assert kinds.count("saddle") == 1


def test_data_error_exits_1_with_json(tmp_path, capsys):
    assert run_cli("mt", tmp_path / "missing", "--out", tmp_path / "t") == 1
    err = capsys.readouterr().err
    rec = json.loads(err)
    assert rec["error"] == "FormatError"
    assert "message" in rec


def test_identical_invocations_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run_cli("fixture", "two_blob_3d", "--seed", 5,
                       "--out", tmp_path / d / "ds") == 0
        trait = write_trait(tmp_path / d / "t.json",
                            {"kind": "point", "channels": ["blobs"],
                             "coords": [-0.8]})
        assert run_cli("trait-eval", tmp_path / d / "ds", trait,
                       "--out", tmp_path / d / "field") == 0
        assert run_cli("segment", tmp_path / d / "field", "--method",
                       "branch_decomposition", "--out", tmp_path / d / "seg") == 0
    for artifact in ("ds", "field", "seg"):
        assert formats.path_digest(tmp_path / "a" / artifact) == \
            formats.path_digest(tmp_path / "b" / artifact)


def test_derive_appends_tensor_channel(tmp_path):
    assert run_cli("fixture", "tensor_block", "--out", tmp_path / "ds") == 0
    assert run_cli("derive", tmp_path / "ds", "--kind", "eig1",
                   "--inputs", "sxx,syy,szz,sxy,sxz,syz",
                   "--out", tmp_path / "ds2") == 0
    mf = formats.load_dataset(tmp_path / "ds2")
    assert "eig1" in mf.channel_names


def test_ingest_normalizes_f32_to_f64(tmp_path):
    assert run_cli("fixture", "two_blob_3d", "--out", tmp_path / "raw",
                   "--dtype", "f32") == 0
    assert run_cli("ingest", tmp_path / "raw", "--out", tmp_path / "norm") == 0
    doc = json.loads((tmp_path / "norm" / "manifest.json").read_text())
    assert all(c["dtype"] == "f64" for c in doc["channels"])
    mf = formats.load_dataset(tmp_path / "norm")
    assert mf.channel("blobs").values.dtype == np.float64


def test_connectivity_flag_recorded_in_grid(tmp_path):
    assert run_cli("fixture", "crossing_stripes_2d", "--connectivity",
                   "vertex8", "--out", tmp_path / "ds") == 0
    mf = formats.load_dataset(tmp_path / "ds")
    assert mf.grid.connectivity == "vertex8"


def test_dict_learn_and_suggest(tmp_path):
    assert run_cli("fixture", "crossing_stripes_2d", "--params",
                   '{"size": 16, "stripe_lo": 6, "stripe_hi": 10}',
                   "--out", tmp_path / "ds") == 0
    select = ",".join(f"sig{i:02d}" for i in range(6))
    assert run_cli("dict-learn", tmp_path / "ds", "--select", select,
                   "--k", 4, "--t0", 1, "--iterations", 5, "--restarts", 1,
                   "--out", tmp_path / "dict") == 0
    d, channels, scaling = formats.load_dictionary(tmp_path / "dict")
    assert d.k == 4 and channels == select.split(",") and scaling == "none"
    assert run_cli("dict-suggest", tmp_path / "dict", tmp_path / "ds",
                   "--top", 2, "--out", tmp_path / "sugg.json") == 0
    doc = json.loads((tmp_path / "sugg.json").read_text())
    assert len(doc["suggestions"]) == 2
    usages = [s["usage"] for s in doc["suggestions"]]
    assert usages == sorted(usages, reverse=True)
    for s in doc["suggestions"]:
        assert formats.validate_trait_doc(s["trait"]) == []


def test_stability_report_written(tmp_path, capsys):
    assert run_cli("fixture", "two_blob_3d", "--params",
                   '{"dims": [6, 6, 4], "centers": [[1.5, 2.0, 1.0], [4.0, 4.0, 2.5]]}',
                   "--out", tmp_path / "ds") == 0
    t1 = write_trait(tmp_path / "t1.json",
                     {"kind": "point", "channels": ["blobs"], "coords": [-0.5]})
    t2 = write_trait(tmp_path / "t2.json",
                     {"kind": "point", "channels": ["blobs"], "coords": [-0.3]})
    assert run_cli("stability", tmp_path / "ds", t1, t2,
                   "--out", tmp_path / "report.json") == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["chain_ok"] is True
    assert rep["d_bottleneck"] <= rep["sup_diff"] + 1e-9
    assert (tmp_path / "report.run.json").exists()


def test_stability_violation_exits_3(tmp_path, capsys, monkeypatch):
    assert run_cli("fixture", "two_blob_3d", "--out", tmp_path / "ds") == 0
    t = write_trait(tmp_path / "t.json",
                    {"kind": "point", "channels": ["blobs"], "coords": [0.0]})
    fake = StabilityReport(d_hausdorff=0.0, hausdorff_exact=True,
                           sample_step=None, sup_diff=1.0, d_bottleneck=2.0,
                           tol=1e-9, diagram_ok=False, field_ok=False,
                           chain_ok=False)
    monkeypatch.setattr("timt.cli.verify_stability_chain",
                        lambda *a, **k: fake)
    code = run_cli("stability", tmp_path / "ds", t, t,
                   "--out", tmp_path / "r.json")
    assert code == 3
    err = capsys.readouterr().err
    assert json.loads(err)["error"] == "StabilityViolation"


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "timt.cli", "fixture", "two_blob_3d",
         "--out", str(tmp_path / "ds")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "ds" / "manifest.json").exists()


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        run_cli("frobnicate")
    assert exc.value.code == 2

"""Command line front end.

Each subcommand reads artifact directories produced by earlier steps and
writes a new artifact directory (or a single JSON file), plus a run
record with content digests of all inputs and outputs, so any artifact
can be reproduced from its record alone.

Exit codes: 0 success, 1 data or format error (a machine readable JSON
error goes to stderr), 2 usage error, 3 stability chain violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import formats
from .dictionary import ksvd_learn, sparse_code, suggest_atom_traits
from .errors import ToolkitError, ValidationError
from .fields import DERIVED_KINDS, ScalarField, assemble_attribute_space, derive_channel
from .fixtures import FIXTURE_KINDS, generate_fixture
from .grid import GridSpec
from .mergetree import compute_merge_tree, simplify
from .queries import METHODS, METRICS, QuerySpec, run_query, segmentation_report
from .stability import verify_stability_chain
from .traits import Leaf, induced_distance_field, validate_expr

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_UNSTABLE = 3


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0,
                   help="seed for anything randomized (default 0)")
    p.add_argument("--connectivity", default=None,
                   choices=["face6", "vertex26", "edge4", "vertex8"],
                   help="override the grid adjacency rule")
    p.add_argument("--semantics", default="csg", choices=["csg", "paper_literal"],
                   help="composite trait distance semantics")


def _sub(subs, name: str, help_: str) -> argparse.ArgumentParser:
    p = subs.add_parser(name, help=help_, description=help_)
    _common_flags(p)
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="timt",
        description="Trait-induced distance fields, merge trees and "
                    "topological segmentation over multi-channel grids.")
    subs = ap.add_subparsers(dest="command", required=True)

    p = _sub(subs, "fixture", "generate a synthetic dataset")
    p.add_argument("kind", choices=list(FIXTURE_KINDS))
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--params", default=None,
                   help="JSON object of generator parameters")
    p.add_argument("--dtype", default="f64", choices=["f32", "f64"])

    p = _sub(subs, "ingest", "validate a dataset and re-save it normalized")
    p.add_argument("manifest", help="dataset directory or manifest path")
    p.add_argument("--out", required=True)
    p.add_argument("--dtype", default="f64", choices=["f32", "f64"])

    p = _sub(subs, "derive", "append a derived channel (tensor measures etc.)")
    p.add_argument("manifest")
    p.add_argument("--kind", required=True, choices=list(DERIVED_KINDS))
    p.add_argument("--inputs", required=True,
                   help="comma separated input channel names")
    p.add_argument("--name", default=None, help="name of the new channel")
    p.add_argument("--out", required=True)

    p = _sub(subs, "trait-eval", "evaluate a trait into a distance field")
    p.add_argument("manifest")
    p.add_argument("trait", help="trait document (JSON file)")
    p.add_argument("--out", required=True)
    p.add_argument("--select", default=None,
                   help="comma separated channels to keep before evaluation")
    p.add_argument("--scaling", default="none", choices=["none", "minmax", "zscore"])

    p = _sub(subs, "mt", "compute the merge tree of a scalar field")
    p.add_argument("field", help="field artifact directory")
    p.add_argument("--out", required=True)
    p.add_argument("--direction", default="sublevel", choices=["sublevel", "superlevel"])

    p = _sub(subs, "segment", "extract a segmentation from a field's merge tree")
    p.add_argument("field", help="field artifact directory")
    p.add_argument("--tree", default=None,
                   help="reuse a tree artifact instead of recomputing")
    p.add_argument("--out", required=True)
    p.add_argument("--method", required=True, choices=list(METHODS))
    p.add_argument("--metric", default="persistence", choices=list(METRICS))
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--cut-level", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)

    p = _sub(subs, "dict-learn", "learn a sparse dictionary from the channels")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=None, help="number of atoms (default 2M)")
    p.add_argument("--t0", type=int, default=2, help="sparsity level")
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--select", default=None)
    p.add_argument("--scaling", default="none", choices=["none", "minmax", "zscore"])

    p = _sub(subs, "dict-suggest", "rank learned atoms as point-trait suggestions")
    p.add_argument("dictionary", help="dictionary artifact directory")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output JSON file")
    p.add_argument("--top", type=int, default=None, help="keep only the first n")

    p = _sub(subs, "stability", "verify the diagram/field/trait distance chain")
    p.add_argument("manifest")
    p.add_argument("trait1")
    p.add_argument("trait2")
    p.add_argument("--out", required=True, help="output JSON file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--sampling", type=float, default=0.05)

    p = _sub(subs, "serve", "run the HTTP service for the browser UI")
    p.add_argument("manifest")
    p.add_argument("--host", default=None, help="bind address (default 127.0.0.1)")
    p.add_argument("--port", type=int, default=None, help="bind port (default 8742)")
    p.add_argument("--ui", default=None, help="static directory to serve at /")

    return ap


def _load_dataset(args) -> "MultiField":
    mf = formats.load_dataset(args.manifest)
    if args.connectivity:
        mf = type(mf)(mf.grid.with_connectivity(args.connectivity), mf.channels)
    return mf


def _selection(arg: str | None) -> list[str] | None:
    if arg is None:
        return None
    names = [s.strip() for s in arg.split(",") if s.strip()]
    if not names:
        raise ValidationError("--select must list at least one channel")
    return names


def _record(args, inputs: dict, outputs: dict, skip=("command",)):
    params = {k: v for k, v in vars(args).items()
              if k not in skip and not callable(v)}
    return formats.make_run_record(args.command, params, inputs, outputs)


def _write_record(out_dir: Path, record: dict):
    formats.write_json(Path(out_dir) / formats.RUN_DOC, record)


def _say(*parts):
    print(" ".join(str(p) for p in parts))


# ---------------------------------------------------------------------------
# subcommand bodies

def _cmd_fixture(args) -> int:
    params = json.loads(args.params) if args.params else None
    if params is not None and not isinstance(params, dict):
        raise ValidationError("--params must be a JSON object")
    mf = generate_fixture(args.kind, params, seed=args.seed)
    if args.connectivity:
        mf = type(mf)(mf.grid.with_connectivity(args.connectivity), mf.channels)
    formats.save_dataset(mf, args.out, dtype=args.dtype)
    _write_record(args.out, _record(args, {}, {"dataset": args.out}))
    _say("dataset:", args.out, f"({mf.n_channels} channels, grid {mf.grid.dims})")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    mf = _load_dataset(args)
    formats.save_dataset(mf, args.out, dtype=args.dtype)
    _write_record(args.out, _record(args, {"dataset": args.manifest},
                                    {"dataset": args.out}))
    _say("dataset:", args.out, f"({mf.n_channels} channels, grid {mf.grid.dims})")
    return EXIT_OK


def _cmd_derive(args) -> int:
    mf = _load_dataset(args)
    inputs = _selection(args.inputs) or []
    mf2 = derive_channel(mf, args.kind, inputs, args.name)
    formats.save_dataset(mf2, args.out)
    _write_record(args.out, _record(args, {"dataset": args.manifest},
                                    {"dataset": args.out}))
    _say("dataset:", args.out, f"(+ channel {mf2.channel_names[-1]!r})")
    return EXIT_OK


def _cmd_trait_eval(args) -> int:
    mf = _load_dataset(args)
    mf = assemble_attribute_space(mf, _selection(args.select), args.scaling)
    expr = formats.load_trait(args.trait)
    validate_expr(expr, mf.channel_names)
    h = induced_distance_field(expr, mf, semantics=args.semantics)
    h = ScalarField(h.grid, h.values, h.meaning,
                    {**h.info, "semantics": args.semantics, "scaling": args.scaling})
    formats.save_field(h, args.out)
    _write_record(args.out, _record(args, {"dataset": args.manifest,
                                           "trait": args.trait},
                                    {"field": args.out}))
    _say("field:", args.out, f"(min {h.values.min():.6g}, max {h.values.max():.6g})")
    return EXIT_OK


def _field_with_connectivity(args) -> ScalarField:
    h = formats.load_field(args.field)
    if args.connectivity:
        h = ScalarField(h.grid.with_connectivity(args.connectivity), h.values,
                        h.meaning, h.info)
    return h


def _cmd_mt(args) -> int:
    h = _field_with_connectivity(args)
    tree = compute_merge_tree(h, direction=args.direction)
    formats.save_tree(tree, args.out)
    kinds = tree.node_kind
    _write_record(args.out, _record(args, {"field": args.field}, {"tree": args.out}))
    _say("tree:", args.out,
         f"({kinds.count('leaf-minimum')} leaves, {kinds.count('saddle')} saddles,"
         f" {tree.n_arcs} arcs)")
    return EXIT_OK


def _cmd_segment(args) -> int:
    h = _field_with_connectivity(args)
    spec = QuerySpec(args.method, args.metric, args.threshold,
                     args.cut_level, args.delta)
    inputs = {"field": args.field}
    if args.tree:
        tree = formats.load_tree(args.tree)
        if not np.array_equal(tree.values, h.values):
            raise ValidationError("--tree was built from different field values")
        inputs["tree"] = args.tree
    else:
        tree = compute_merge_tree(h)
    seg = run_query(h, tree, spec)
    formats.save_segmentation(seg, args.out)
    _write_record(args.out, _record(args, inputs, {"segmentation": args.out}))
    _say("segmentation:", args.out, f"({seg.n_segments} segments)")
    return EXIT_OK


def _cmd_dict_learn(args) -> int:
    mf = _load_dataset(args)
    selection = _selection(args.select)
    mf = assemble_attribute_space(mf, selection, args.scaling)
    data = mf.matrix()
    d, _codes = ksvd_learn(data, k=args.k, t0=args.t0,
                           iterations=args.iterations, seed=args.seed,
                           restarts=args.restarts)
    formats.save_dictionary(d, mf.channel_names, args.scaling, args.out)
    _write_record(args.out, _record(args, {"dataset": args.manifest},
                                    {"dictionary": args.out}))
    _say("dictionary:", args.out,
         f"(K={d.k}, T0={d.t0}, rmse {d.training_meta['rmse']:.6g})")
    return EXIT_OK


def _cmd_dict_suggest(args) -> int:
    d, channels, scaling = formats.load_dictionary(args.dictionary)
    mf = _load_dataset(args)
    mf = assemble_attribute_space(mf, channels, scaling)
    codes = sparse_code(d, mf.matrix())
    suggestions = suggest_atom_traits(d, codes, mf)
    if args.top is not None:
        suggestions = suggestions[:max(args.top, 0)]
    doc = {"format": "timt-suggestions", "version": formats.FORMAT_VERSION,
           "scaling": scaling,
           "suggestions": [{"atom": s.atom, "usage": float(s.usage),
                            "trait": formats.trait_to_doc(Leaf(s.trait))}
                           for s in suggestions]}
    out = Path(args.out)
    formats.write_json(out, doc)
    record = _record(args, {"dictionary": args.dictionary,
                            "dataset": args.manifest}, {"suggestions": out})
    formats.write_json(out.with_suffix(".run.json"), record)
    _say("suggestions:", out, f"({len(suggestions)} atoms)")
    return EXIT_OK


def _cmd_stability(args) -> int:
    mf = _load_dataset(args)
    t1 = formats.load_trait(args.trait1)
    t2 = formats.load_trait(args.trait2)
    report = verify_stability_chain(t1, t2, mf, tol=args.tol,
                                    semantics=args.semantics,
                                    sampling=args.sampling)
    out = Path(args.out)
    formats.write_json(out, report.as_dict())
    record = _record(args, {"dataset": args.manifest, "trait1": args.trait1,
                            "trait2": args.trait2}, {"report": out})
    formats.write_json(out.with_suffix(".run.json"), record)
    _say("stability:", "ok" if report.chain_ok else "VIOLATED",
         f"(bottleneck {report.d_bottleneck:.6g} <= sup {report.sup_diff:.6g}"
         f" <= hausdorff {report.d_hausdorff:.6g})")
    if not report.chain_ok:
        print(json.dumps({"error": "StabilityViolation",
                          "report": formats.jsonable(report.as_dict())}),
              file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    env = os.environ.get("TIMT_BIND", "")
    env_host, _, env_port = env.rpartition(":")
    host = args.host or env_host or "127.0.0.1"
    port = args.port if args.port is not None else int(env_port or 8742)
    app = create_app(formats.load_dataset(args.manifest), seed=args.seed,
                     semantics=args.semantics, connectivity=args.connectivity,
                     ui_dir=args.ui)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


_COMMANDS = {
    "fixture": _cmd_fixture,
    "ingest": _cmd_ingest,
    "derive": _cmd_derive,
    "trait-eval": _cmd_trait_eval,
    "mt": _cmd_mt,
    "segment": _cmd_segment,
    "dict-learn": _cmd_dict_learn,
    "dict-suggest": _cmd_dict_suggest,
    "stability": _cmd_stability,
    "serve": _cmd_serve,
}


def _usage_check(ap: argparse.ArgumentParser, args):
    """Method/parameter coherence is a usage problem, not a data problem."""
    if args.command == "segment":
        if args.method == "subtrees" and args.cut_level is None:
            ap.error("segment --method subtrees requires --cut-level")
        if args.method == "crown" and args.delta is None:
            ap.error("segment --method crown requires --delta")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _usage_check(ap, args)
    try:
        return _COMMANDS[args.command](args)
    except ToolkitError as exc:
        print(json.dumps(exc.to_json(), default=str), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())

"""On-disk artifact formats and canonical JSON documents.

Every artifact is a directory holding one JSON document plus raw numeric
payloads.  Payloads are little-endian buffers whose dtype, ordering and
byte size the document declares exactly; vertex data is x-fastest row
major, matching the grid indexing convention.  JSON is always emitted in
canonical form (sorted keys, compact separators, ASCII) so equal content
is byte-identical, which makes artifacts diffable and run digests stable.

Trait and query documents are plain JSON values with no payload; they
travel through files and the HTTP API alike.  Unbounded box intervals
use ``null`` in place of the infinite endpoint since canonical JSON
refuses non-finite numbers.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from importlib import metadata as _metadata
from pathlib import Path

import numpy as np

from .dictionary import Dictionary
from .errors import FormatError, ToolkitError
from .fields import Channel, MultiField, ScalarField
from .grid import GridSpec
from .mergetree import MergeTree, persistence_pairs
from .queries import QuerySpec, Segment, Segmentation
from .traits import (And, BoxTrait, Leaf, Not, Or, PointTrait, PolygonTrait,
                     ProductL2, SegmentTrait, TraitExpr)

FORMAT_VERSION = 1

DATASET_DOC = "manifest.json"
FIELD_DOC = "field.json"
TREE_DOC = "tree.json"
SEGMENTATION_DOC = "segmentation.json"
DICTIONARY_DOC = "dictionary.json"
RUN_DOC = "run.json"

_DTYPES = {"f32": "<f4", "f64": "<f8", "i32": "<i4"}
_MAX_DEPTH = 64


def package_version() -> str:
    try:
        return _metadata.version("timt")
    except _metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# canonical JSON

def jsonable(obj):
    """Recursively convert numpy containers/scalars into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise FormatError(f"value of type {type(obj).__name__} is not JSON-serializable")


def canonical_json(doc) -> str:
    """Stable compact encoding: equal documents give equal bytes."""
    try:
        return json.dumps(jsonable(doc), sort_keys=True,
                          separators=(",", ":"), allow_nan=False)
    except ValueError as exc:
        raise FormatError(f"document contains a non-finite number: {exc}") from exc


def write_json(path: Path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(doc), encoding="ascii")
    return path


def read_json(path: Path):
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no such document: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path.name}: not valid JSON ({exc})") from exc


def _resolve_doc(path, default_name: str) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / default_name
    return p


def _require(doc: dict, key: str, what: str):
    if not isinstance(doc, dict):
        raise FormatError(f"{what}: expected an object, got {type(doc).__name__}")
    if key not in doc:
        raise FormatError(f"{what}: missing key {key!r}")
    return doc[key]


def _check_format(doc: dict, tag: str, what: str):
    if _require(doc, "format", what) != tag:
        raise FormatError(f"{what}: format is {doc['format']!r}, expected {tag!r}")
    version = _require(doc, "version", what)
    if version != FORMAT_VERSION:
        raise FormatError(f"{what}: unsupported version {version!r}")


def _read_raw(path: Path, dtype: str, count: int, what: str) -> np.ndarray:
    if not path.is_file():
        raise FormatError(f"{what}: payload file {path} is missing")
    expected = count * np.dtype(_DTYPES[dtype]).itemsize
    actual = path.stat().st_size
    if actual != expected:
        raise FormatError(
            f"{what}: payload {path.name} holds {actual} bytes, "
            f"declared size needs exactly {expected}")
    return np.fromfile(path, dtype=_DTYPES[dtype])


def _write_raw(path: Path, values: np.ndarray, dtype: str):
    np.ascontiguousarray(values).astype(_DTYPES[dtype]).tofile(path)


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name) or "channel"


# ---------------------------------------------------------------------------
# trait documents

_PRIMITIVE_KEYS = {
    "point": {"kind", "channels", "coords"},
    "segment": {"kind", "channels", "start", "end"},
    "box": {"kind", "channels", "intervals"},
    "polygon": {"kind", "channels", "vertices"},
}
_OPS = {"and", "or", "not", "product_l2"}


class _DocError(FormatError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '$'}: {message}", path=path or "$",
                         doc_message=message)


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _DocError(path, f"expected a number, got {value!r}")
    out = float(value)
    if math.isnan(out) or math.isinf(out):
        raise _DocError(path, "number must be finite")
    return out


def _bound(value, path: str, side: int) -> float:
    """Box endpoint: null encodes the unbounded side."""
    if value is None:
        return -math.inf if side == 0 else math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _DocError(path, f"expected a number or null, got {value!r}")
    out = float(value)
    if math.isnan(out) or math.isinf(out):
        raise _DocError(path, "interval endpoints must be finite or null")
    return out


def _vector(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise _DocError(path, "expected a non-empty array of numbers")
    return tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(value))


def _channels(value, path: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not value:
        raise _DocError(path, "expected a non-empty array of channel names")
    for i, v in enumerate(value):
        if not isinstance(v, str) or not v:
            raise _DocError(f"{path}[{i}]", "channel name must be a non-empty string")
    return tuple(value)


def _prim_from_doc(doc: dict, path: str):
    kind = doc.get("kind")
    allowed = _PRIMITIVE_KEYS[kind]
    extra = set(doc) - allowed
    if extra:
        raise _DocError(path, f"unknown keys for {kind}: {sorted(extra)}")
    missing = allowed - set(doc)
    if missing:
        raise _DocError(path, f"missing keys for {kind}: {sorted(missing)}")
    chans = _channels(doc["channels"], f"{path}.channels")
    try:
        if kind == "point":
            return PointTrait(chans, _vector(doc["coords"], f"{path}.coords"))
        if kind == "segment":
            return SegmentTrait(chans, _vector(doc["start"], f"{path}.start"),
                                _vector(doc["end"], f"{path}.end"))
        if kind == "box":
            ivs = doc["intervals"]
            if not isinstance(ivs, list) or not ivs:
                raise _DocError(f"{path}.intervals", "expected a non-empty array of [lo, hi] pairs")
            parsed = []
            for i, iv in enumerate(ivs):
                if not isinstance(iv, list) or len(iv) != 2:
                    raise _DocError(f"{path}.intervals[{i}]", "expected a [lo, hi] pair")
                parsed.append((_bound(iv[0], f"{path}.intervals[{i}][0]", 0),
                               _bound(iv[1], f"{path}.intervals[{i}][1]", 1)))
            return BoxTrait(chans, tuple(parsed))
        verts = doc["vertices"]
        if not isinstance(verts, list):
            raise _DocError(f"{path}.vertices", "expected an array of [x, y] pairs")
        parsed = []
        for i, v in enumerate(verts):
            if not isinstance(v, list) or len(v) != 2:
                raise _DocError(f"{path}.vertices[{i}]", "expected an [x, y] pair")
            parsed.append((_num(v[0], f"{path}.vertices[{i}][0]"),
                           _num(v[1], f"{path}.vertices[{i}][1]")))
        return PolygonTrait(chans, tuple(parsed))
    except _DocError:
        raise
    except ToolkitError as exc:
        raise _DocError(path, exc.message) from exc


def _expr_from_doc(doc, path: str, depth: int) -> TraitExpr:
    if depth > _MAX_DEPTH:
        raise _DocError(path, f"expression nested deeper than {_MAX_DEPTH}")
    if not isinstance(doc, dict):
        raise _DocError(path, f"expected an object, got {type(doc).__name__}")
    if "kind" in doc and "op" in doc:
        raise _DocError(path, "node has both 'kind' and 'op'")
    if "kind" in doc:
        kind = doc["kind"]
        if kind not in _PRIMITIVE_KEYS:
            raise _DocError(f"{path}.kind",
                            f"unknown primitive {kind!r}; expected one of {sorted(_PRIMITIVE_KEYS)}")
        return Leaf(_prim_from_doc(doc, path))
    if "op" not in doc:
        raise _DocError(path, "node needs either 'kind' (primitive) or 'op' (composite)")
    op = doc["op"]
    if op not in _OPS:
        raise _DocError(f"{path}.op", f"unknown op {op!r}; expected one of {sorted(_OPS)}")
    if op == "not":
        extra = set(doc) - {"op", "child"}
        if extra:
            raise _DocError(path, f"unknown keys for 'not': {sorted(extra)}")
        if "child" not in doc:
            raise _DocError(path, "'not' needs a 'child'")
        return Not(_expr_from_doc(doc["child"], f"{path}.child", depth + 1))
    extra = set(doc) - {"op", "children"}
    if extra:
        raise _DocError(path, f"unknown keys for {op!r}: {sorted(extra)}")
    kids = doc.get("children")
    if not isinstance(kids, list) or not kids:
        raise _DocError(f"{path}.children", "expected a non-empty array of nodes")
    parsed = tuple(_expr_from_doc(k, f"{path}.children[{i}]", depth + 1)
                   for i, k in enumerate(kids))
    return {"and": And, "or": Or, "product_l2": ProductL2}[op](parsed)


def trait_from_doc(doc) -> TraitExpr:
    return _expr_from_doc(doc, "$", 0)


def validate_trait_doc(doc) -> list[dict]:
    """Empty list when valid, else the first failure as {path, message}."""
    try:
        trait_from_doc(doc)
    except _DocError as exc:
        return [{"path": exc.details["path"], "message": exc.details["doc_message"]}]
    return []


def trait_to_doc(expr: TraitExpr) -> dict:
    if isinstance(expr, Leaf):
        p = expr.primitive
        if isinstance(p, PointTrait):
            return {"kind": "point", "channels": list(p.subspace),
                    "coords": [float(c) for c in p.coords]}
        if isinstance(p, SegmentTrait):
            return {"kind": "segment", "channels": list(p.subspace),
                    "start": [float(c) for c in p.start],
                    "end": [float(c) for c in p.end]}
        if isinstance(p, BoxTrait):
            ivs = [[None if math.isinf(lo) else float(lo),
                    None if math.isinf(hi) else float(hi)]
                   for lo, hi in p.intervals]
            return {"kind": "box", "channels": list(p.subspace), "intervals": ivs}
        if isinstance(p, PolygonTrait):
            return {"kind": "polygon", "channels": list(p.subspace),
                    "vertices": [[float(x), float(y)] for x, y in p.vertices]}
        raise FormatError(f"unknown primitive type {type(p).__name__}")
    if isinstance(expr, Not):
        return {"op": "not", "child": trait_to_doc(expr.child)}
    for cls, op in ((And, "and"), (Or, "or"), (ProductL2, "product_l2")):
        if isinstance(expr, cls):
            return {"op": op, "children": [trait_to_doc(c) for c in expr.children]}
    raise FormatError(f"unknown expression type {type(expr).__name__}")


def canonicalize_trait_doc(doc) -> str:
    """Parse, normalize and re-emit; the fixed point of trait encoding."""
    return canonical_json(trait_to_doc(trait_from_doc(doc)))


def save_trait(expr: TraitExpr, path) -> Path:
    return write_json(Path(path), trait_to_doc(expr))


def load_trait(path) -> TraitExpr:
    return trait_from_doc(read_json(path))


# ---------------------------------------------------------------------------
# query documents

def validate_query_doc(doc) -> list[dict]:
    if not isinstance(doc, dict):
        return [{"path": "$", "message": f"expected an object, got {type(doc).__name__}"}]
    try:
        QuerySpec.from_dict(doc)
    except ToolkitError as exc:
        return [{"path": "$", "message": exc.message}]
    return []


def query_from_doc(doc) -> QuerySpec:
    errs = validate_query_doc(doc)
    if errs:
        raise FormatError(f"invalid query document: {errs[0]['message']}",
                          errors=errs)
    return QuerySpec.from_dict(doc)


# ---------------------------------------------------------------------------
# datasets

def save_dataset(mf: MultiField, out_dir, dtype: str = "f64") -> Path:
    if dtype not in ("f32", "f64"):
        raise FormatError(f"dataset dtype must be f32 or f64, got {dtype!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, ch in enumerate(mf.channels):
        fname = f"{i:03d}_{_safe_name(ch.name)}.raw"
        if dtype == "f32":
            with np.errstate(over="ignore"):
                cast = ch.values.astype("<f4")
            bad = ~np.isfinite(cast.astype(np.float64))
            if bad.any():
                raise FormatError(
                    f"channel {ch.name!r} overflows f32 at vertex "
                    f"{int(np.flatnonzero(bad)[0])}; store as f64 instead")
            cast.tofile(out / fname)
        else:
            _write_raw(out / fname, ch.values, "f64")
        entries.append({"name": ch.name, "unit": ch.unit,
                        "provenance": ch.provenance, "dtype": dtype,
                        "path": fname})
    doc = {"format": "timt-dataset", "version": FORMAT_VERSION,
           "grid": mf.grid.as_dict(), "channels": entries}
    return write_json(out / DATASET_DOC, doc)


def load_dataset(path) -> MultiField:
    doc_path = _resolve_doc(path, DATASET_DOC)
    doc = read_json(doc_path)
    what = doc_path.name
    _check_format(doc, "timt-dataset", what)
    grid = GridSpec.from_dict(_require(doc, "grid", what))
    entries = _require(doc, "channels", what)
    if not isinstance(entries, list) or not entries:
        raise FormatError(f"{what}: 'channels' must be a non-empty array")
    chans = []
    for i, e in enumerate(entries):
        where = f"{what}: channels[{i}]"
        name = _require(e, "name", where)
        dtype = _require(e, "dtype", where)
        if dtype not in ("f32", "f64"):
            raise FormatError(f"{where}: dtype must be f32 or f64, got {dtype!r}")
        rel = _require(e, "path", where)
        raw = _read_raw(doc_path.parent / rel, dtype, grid.n_vertices,
                        f"channel {name!r}")
        chans.append(Channel(name, raw.astype(np.float64),
                             unit=e.get("unit", ""),
                             provenance=e.get("provenance", "raw")))
    return MultiField(grid, tuple(chans))


# ---------------------------------------------------------------------------
# scalar fields

def save_field(sf: ScalarField, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_raw(out / "values.raw", sf.values, "f64")
    doc = {"format": "timt-field", "version": FORMAT_VERSION,
           "grid": sf.grid.as_dict(), "meaning": sf.meaning,
           "info": jsonable(sf.info), "dtype": "f64", "path": "values.raw"}
    return write_json(out / FIELD_DOC, doc)


def load_field(path) -> ScalarField:
    doc_path = _resolve_doc(path, FIELD_DOC)
    doc = read_json(doc_path)
    what = doc_path.name
    _check_format(doc, "timt-field", what)
    grid = GridSpec.from_dict(_require(doc, "grid", what))
    raw = _read_raw(doc_path.parent / _require(doc, "path", what),
                    _require(doc, "dtype", what), grid.n_vertices, "field values")
    return ScalarField(grid, raw.astype(np.float64),
                       meaning=doc.get("meaning", "generic"),
                       info=doc.get("info", {}))


# ---------------------------------------------------------------------------
# merge trees

def tree_to_doc(tree: MergeTree) -> dict:
    counts = np.bincount(tree.arc_of_vertex, minlength=tree.n_arcs)
    pairing = persistence_pairs(tree)
    vals = tree.node_values
    return {
        "format": "timt-tree", "version": FORMAT_VERSION,
        "grid": tree.grid.as_dict(), "direction": tree.direction,
        "tie_rule": tree.tie_rule, "root": int(tree.root),
        "nodes": [{"id": i, "vertex": int(tree.node_vertex[i]),
                   "value": float(vals[i]), "kind": tree.node_kind[i]}
                  for i in range(tree.n_nodes)],
        "arcs": [{"id": a, "lower": int(tree.arc_lower[a]),
                  "upper": int(tree.arc_upper[a]), "n_members": int(counts[a])}
                 for a in range(tree.n_arcs)],
        "pairs": [{"min_node": int(pairing.min_node[p]),
                   "death_node": int(pairing.death_node[p]),
                   "persistence": float(pairing.persistence[p]),
                   "essential": bool(pairing.essential[p])}
                  for p in range(len(pairing.min_node))],
    }


def save_tree(tree: MergeTree, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = tree_to_doc(tree)
    doc["values_path"] = "values.raw"
    doc["membership_path"] = "arc_of_vertex.raw"
    _write_raw(out / "values.raw", tree.values, "f64")
    _write_raw(out / "arc_of_vertex.raw", tree.arc_of_vertex, "i32")
    return write_json(out / TREE_DOC, doc)


def load_tree(path) -> MergeTree:
    doc_path = _resolve_doc(path, TREE_DOC)
    doc = read_json(doc_path)
    what = doc_path.name
    _check_format(doc, "timt-tree", what)
    grid = GridSpec.from_dict(_require(doc, "grid", what))
    n = grid.n_vertices
    values = _read_raw(doc_path.parent / _require(doc, "values_path", what),
                       "f64", n, "tree values").astype(np.float64)
    arc_of = _read_raw(doc_path.parent / _require(doc, "membership_path", what),
                       "i32", n, "arc membership").astype(np.int64)
    nodes = _require(doc, "nodes", what)
    arcs = _require(doc, "arcs", what)
    node_vertex = np.asarray([_require(nd, "vertex", f"{what}: node") for nd in nodes],
                             dtype=np.int64)
    node_kind = [_require(nd, "kind", f"{what}: node") for nd in nodes]
    arc_lower = np.asarray([_require(a, "lower", f"{what}: arc") for a in arcs],
                           dtype=np.int64)
    arc_upper = np.asarray([_require(a, "upper", f"{what}: arc") for a in arcs],
                           dtype=np.int64)
    if arc_of.size and (arc_of.min() < 0 or arc_of.max() >= len(arcs)):
        raise FormatError(f"{what}: arc membership references undeclared arcs")
    return MergeTree(grid, values, node_vertex, node_kind,
                     int(_require(doc, "root", what)), arc_lower, arc_upper,
                     arc_of, direction=doc.get("direction", "sublevel"),
                     tie_rule=doc.get("tie_rule", "index-order"))


# ---------------------------------------------------------------------------
# segmentations

def save_segmentation(seg: Segmentation, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_raw(out / "labels.raw", seg.labels, "i32")
    doc = {"format": "timt-segmentation", "version": FORMAT_VERSION,
           "grid": seg.grid.as_dict(), "spec": seg.spec.as_dict(),
           "info": jsonable(seg.info), "dtype": "i32", "path": "labels.raw",
           "segments": [{"id": s.id, "min_vertex": s.min_vertex,
                         "min_value": float(s.min_value),
                         "vertex_count": s.vertex_count,
                         "metric_value": float(s.metric_value),
                         "group": s.group}
                        for s in seg.segments]}
    return write_json(out / SEGMENTATION_DOC, doc)


def load_segmentation(path) -> Segmentation:
    doc_path = _resolve_doc(path, SEGMENTATION_DOC)
    doc = read_json(doc_path)
    what = doc_path.name
    _check_format(doc, "timt-segmentation", what)
    grid = GridSpec.from_dict(_require(doc, "grid", what))
    labels = _read_raw(doc_path.parent / _require(doc, "path", what),
                       "i32", grid.n_vertices, "segment labels").astype(np.int32)
    spec = QuerySpec.from_dict(_require(doc, "spec", what))
    segs = []
    for i, e in enumerate(_require(doc, "segments", what)):
        where = f"{what}: segments[{i}]"
        segs.append(Segment(int(_require(e, "id", where)),
                            int(_require(e, "min_vertex", where)),
                            float(_require(e, "min_value", where)),
                            int(_require(e, "vertex_count", where)),
                            float(_require(e, "metric_value", where)),
                            int(_require(e, "group", where))))
    return Segmentation(grid, labels, tuple(segs), spec, doc.get("info", {}))


# ---------------------------------------------------------------------------
# dictionaries

def save_dictionary(d: Dictionary, channels: list[str], scaling: str,
                    out_dir) -> Path:
    if len(channels) != d.m:
        raise FormatError(f"dictionary has {d.m} rows but {len(channels)} channel names")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_raw(out / "atoms.raw", d.atoms, "f64")
    doc = {"format": "timt-dictionary", "version": FORMAT_VERSION,
           "m": d.m, "k": d.k, "t0": d.t0, "channels": list(channels),
           "scaling": scaling, "training": jsonable(d.training_meta),
           "dtype": "f64", "order": "row-major", "path": "atoms.raw"}
    return write_json(out / DICTIONARY_DOC, doc)


def load_dictionary(path) -> tuple[Dictionary, list[str], str]:
    doc_path = _resolve_doc(path, DICTIONARY_DOC)
    doc = read_json(doc_path)
    what = doc_path.name
    _check_format(doc, "timt-dictionary", what)
    m = int(_require(doc, "m", what))
    k = int(_require(doc, "k", what))
    raw = _read_raw(doc_path.parent / _require(doc, "path", what),
                    "f64", m * k, "dictionary atoms")
    atoms = raw.astype(np.float64).reshape(m, k)
    channels = _require(doc, "channels", what)
    if len(channels) != m:
        raise FormatError(f"{what}: {len(channels)} channel names for {m} rows")
    d = Dictionary(atoms, int(_require(doc, "t0", what)),
                   training_meta=doc.get("training", {}))
    return d, list(channels), doc.get("scaling", "none")


# ---------------------------------------------------------------------------
# run records

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def path_digest(path) -> str:
    """Digest of a file, or of a directory's sorted (name, digest) listing."""
    p = Path(path)
    if p.is_dir():
        h = hashlib.sha256()
        for f in sorted(q for q in p.rglob("*") if q.is_file() and q.name != RUN_DOC):
            h.update(str(f.relative_to(p)).encode())
            h.update(bytes.fromhex(file_digest(f)))
        return h.hexdigest()
    return file_digest(p)


def make_run_record(command: str, params: dict, inputs: dict, outputs: dict) -> dict:
    """Reproducibility record: digests and parameters, no timestamps."""
    return {
        "format": "timt-run", "version": FORMAT_VERSION,
        "command": command, "params": jsonable(params),
        "inputs": {k: {"path": str(v), "digest": path_digest(v)}
                   for k, v in inputs.items()},
        "outputs": {k: {"path": str(v), "digest": path_digest(v)}
                    for k, v in outputs.items()},
        "package_version": package_version(),
    }

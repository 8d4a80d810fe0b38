"""HTTP service backing the browser interface.

One immutable dataset snapshot per process.  Traits are named documents;
distance fields, merge trees and segmentations are cached by a content
hash of everything that determines them (trait document, semantics,
query spec), so identical requests return identical artifacts and a
cache entry is only ever computed once.  All numeric payloads state
their dtype and ordering explicitly.

The CORS policy is wide open; the service is meant to sit behind
localhost for the bundled UI only, not to face a network.
"""

from __future__ import annotations

import hashlib
import json
import threading

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import formats
from .dictionary import ksvd_learn, sparse_code, suggest_atom_traits
from .errors import ToolkitError, ValidationError
from .fields import MultiField, ScalarField, assemble_attribute_space
from .grid import slice_plane
from .mergetree import compute_merge_tree, simplify
from .queries import QuerySpec, run_query, segmentation_report
from .traits import Leaf, induced_distance_field, subspace_channels

_ORDER = "x-fastest row-major"


def _key(doc) -> str:
    return hashlib.sha256(formats.canonical_json(doc).encode()).hexdigest()[:16]


def _error_response(status: int, message: str, errors: list | None = None):
    body = {"detail": message}
    if errors:
        body["errors"] = errors
    return JSONResponse(body, status_code=status)


class SessionState:
    """Snapshot of one dataset plus content-addressed derived artifacts."""

    def __init__(self, mf: MultiField, seed: int = 0, semantics: str = "csg"):
        self.mf = mf
        self.seed = int(seed)
        self.semantics = semantics
        self.traits: dict[str, str] = {}          # name -> canonical doc
        self._fields: dict[str, ScalarField] = {}
        self._trees: dict[str, object] = {}
        self._segmentations: dict[str, object] = {}
        self._suggestions: dict[str, dict] = {}
        self._jobs: dict[str, dict] = {}
        self._meta = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}

    def _lock_for(self, key: str) -> threading.Lock:
        with self._meta:
            return self._key_locks.setdefault(key, threading.Lock())

    def compute_once(self, cache: dict, key: str, kind: str, fn):
        """Idempotent cache fill; at most one computation per key."""
        with self._lock_for(key):
            if key not in cache:
                cache[key] = fn()
                with self._meta:
                    self._jobs[key] = {"id": key, "kind": kind, "status": "done"}
        return cache[key]

    # keys ------------------------------------------------------------------

    def field_key(self, trait_doc: str) -> str:
        return _key({"artifact": "field", "trait": trait_doc,
                     "semantics": self.semantics,
                     "connectivity": self.mf.grid.connectivity})

    def tree_key(self, field_key: str) -> str:
        return _key({"artifact": "tree", "field": field_key})

    def segmentation_key(self, field_key: str, spec: QuerySpec) -> str:
        return _key({"artifact": "segmentation", "field": field_key,
                     "spec": spec.as_dict()})

    # artifacts -------------------------------------------------------------

    def field_for(self, name: str) -> tuple[str, ScalarField]:
        doc = self.traits[name]
        key = self.field_key(doc)
        expr = formats.trait_from_doc(json.loads(doc))
        h = self.compute_once(
            self._fields, key, "field",
            lambda: induced_distance_field(expr, self.mf, self.semantics))
        return key, h

    def tree_for(self, name: str):
        fkey, h = self.field_for(name)
        key = self.tree_key(fkey)
        tree = self.compute_once(self._trees, key, "tree",
                                 lambda: compute_merge_tree(h))
        return fkey, h, tree

    def segmentation_for(self, name: str, spec: QuerySpec):
        fkey, h, tree = self.tree_for(name)
        key = self.segmentation_key(fkey, spec)
        seg = self.compute_once(self._segmentations, key, "segmentation",
                                lambda: run_query(h, tree, spec))
        return key, seg

    def job(self, key: str) -> dict | None:
        with self._meta:
            return self._jobs.get(key)


def _slice_payload(values: np.ndarray, grid, axis: str, index: int, dtype: str):
    plane = slice_plane(values, grid, axis, index)
    return {"axis": axis, "index": index,
            "shape": [int(plane.shape[0]), int(plane.shape[1])],
            "dtype": dtype, "order": _ORDER,
            "values": plane.ravel().tolist()}


def create_app(mf: MultiField, seed: int = 0, semantics: str = "csg",
               connectivity: str | None = None,
               ui_dir: str | None = None) -> FastAPI:
    if connectivity:
        mf = MultiField(mf.grid.with_connectivity(connectivity), mf.channels)
    state = SessionState(mf, seed=seed, semantics=semantics)
    app = FastAPI(title="trait-induced merge tree service")
    app.state.session = state
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ToolkitError)
    async def _toolkit_error(request: Request, exc: ToolkitError):
        status = 422 if isinstance(exc, ValidationError) else 500
        return _error_response(status, exc.message)

    # --- dataset ------------------------------------------------------------

    @app.get("/dataset")
    def dataset():
        chans = []
        for c in state.mf.channels:
            v = c.values
            chans.append({"name": c.name, "unit": c.unit,
                          "provenance": c.provenance, "dtype": "f64",
                          "stats": {"min": float(v.min()), "max": float(v.max()),
                                    "mean": float(v.mean()), "std": float(v.std())}})
        return {"grid": state.mf.grid.as_dict(), "channels": chans,
                "semantics": state.semantics,
                "scatter": "/dataset/scatter?x=<channel>&y=<channel>&bins=128"}

    @app.get("/dataset/scatter")
    def scatter(x: str, y: str, bins: int = 128):
        if not (2 <= bins <= 512):
            return _error_response(422, "bins must be in [2, 512]")
        for name in (x, y):
            if not state.mf.has_channel(name):
                return _error_response(404, f"no channel named {name!r}")
        xv = state.mf.channel(x).values
        yv = state.mf.channel(y).values
        budget = 200_000
        note = "all vertices"
        if xv.size > budget:
            idx = np.random.default_rng(state.seed).choice(xv.size, budget,
                                                           replace=False)
            xv, yv = xv[idx], yv[idx]
            note = f"sampled {budget} of {state.mf.grid.n_vertices} vertices"
        counts, xe, ye = np.histogram2d(xv, yv, bins=bins)
        return {"x": x, "y": y, "bins": bins, "sampling": note,
                "dtype": "i64", "order": "row-major (x bins outer)",
                "counts": counts.astype(np.int64).tolist(),
                "x_edges": xe.tolist(), "y_edges": ye.tolist()}

    # --- traits ---------------------------------------------------------------

    @app.put("/traits/{name}")
    async def put_trait(name: str, request: Request):
        try:
            doc = await request.json()
        except Exception:
            return _error_response(422, "body is not valid JSON")
        errs = formats.validate_trait_doc(doc)
        if errs:
            return _error_response(422, "invalid trait document", errs)
        expr = formats.trait_from_doc(doc)
        missing = [c for c in subspace_channels(expr)
                   if not state.mf.has_channel(c)]
        if missing:
            return _error_response(
                409, f"trait references channels not in this dataset: {missing}")
        canonical = formats.canonical_json(formats.trait_to_doc(expr))
        state.traits[name] = canonical
        return {"name": name, "stored": True,
                "field": f"/fields/{name}/slice", "bytes": len(canonical)}

    @app.get("/traits")
    def list_traits():
        return {"traits": sorted(state.traits)}

    @app.get("/traits/{name}")
    def get_trait(name: str):
        if name not in state.traits:
            return _error_response(404, f"no trait named {name!r}")
        return Response(content=state.traits[name], media_type="application/json")

    # --- fields ---------------------------------------------------------------

    @app.get("/fields/{name}/slice")
    def field_slice(name: str, axis: str = "z", index: int = 0):
        if name not in state.traits:
            return _error_response(404, f"no trait named {name!r}")
        key, h = state.field_for(name)
        payload = _slice_payload(h.values, state.mf.grid, axis, index, "f64")
        payload["trait"] = name
        payload["field_id"] = key
        return payload

    # --- queries / segmentations ----------------------------------------------

    @app.post("/query")
    async def post_query(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error_response(422, "body is not valid JSON")
        if not isinstance(body, dict) or "trait" not in body or "spec" not in body:
            return _error_response(422, "body must be {'trait': name, 'spec': {...}}")
        name = body["trait"]
        if name not in state.traits:
            return _error_response(404, f"no trait named {name!r}")
        errs = formats.validate_query_doc(body["spec"])
        if errs:
            return _error_response(422, "invalid query spec", errs)
        spec = QuerySpec.from_dict(body["spec"])
        known = state.job(state.segmentation_key(
            state.field_key(state.traits[name]), spec)) is not None
        key, seg = state.segmentation_for(name, spec)
        return {"id": key, "n_segments": seg.n_segments, "cached": known,
                "job": f"/jobs/{key}", "report": f"/segments/{key}"}

    @app.get("/jobs/{key}")
    def job_status(key: str):
        job = state.job(key)
        if job is None:
            return _error_response(404, f"no job {key!r}")
        return job

    @app.get("/segments/{key}")
    def segment_report(key: str):
        seg = state._segmentations.get(key)
        if seg is None:
            return _error_response(404, f"no segmentation {key!r}")
        return {"id": key, "spec": seg.spec.as_dict(),
                "info": formats.jsonable(seg.info),
                "n_segments": seg.n_segments,
                "segments": segmentation_report(seg)}

    @app.get("/segments/{key}/slice")
    def segment_slice(key: str, axis: str = "z", index: int = 0):
        seg = state._segmentations.get(key)
        if seg is None:
            return _error_response(404, f"no segmentation {key!r}")
        payload = _slice_payload(seg.labels, seg.grid, axis, index, "i32")
        payload["id"] = key
        payload["background"] = -1
        return payload

    # --- trees ------------------------------------------------------------------

    @app.get("/tree/{name}")
    def tree_export(name: str, simplify_threshold: float = 0.0,
                    metric: str = "persistence"):
        if name not in state.traits:
            return _error_response(404, f"no trait named {name!r}")
        fkey, h, tree = state.tree_for(name)
        if simplify_threshold > 0.0:
            tree = simplify(tree, metric=metric, threshold=simplify_threshold)
        doc = formats.tree_to_doc(tree)
        doc.pop("format")
        doc.pop("version")
        doc["trait"] = name
        doc["field_id"] = fkey
        return doc

    # --- dictionary ---------------------------------------------------------------

    @app.get("/dictionary/suggestions")
    def suggestions(channels: str | None = None, scaling: str = "none",
                    k: int | None = None, t0: int = 2, iterations: int = 15,
                    top: int | None = None):
        names = ([s.strip() for s in channels.split(",") if s.strip()]
                 if channels else state.mf.channel_names)
        missing = [c for c in names if not state.mf.has_channel(c)]
        if missing:
            return _error_response(
                409, f"unknown channels for suggestions: {missing}")
        cfg_key = _key({"artifact": "suggestions", "channels": names,
                        "scaling": scaling, "k": k, "t0": t0,
                        "iterations": iterations, "seed": state.seed})

        def build():
            sub = assemble_attribute_space(state.mf, names, scaling)
            data = sub.matrix()
            d, _ = ksvd_learn(data, k=k, t0=t0, iterations=iterations,
                              seed=state.seed)
            codes = sparse_code(d, data)
            ranked = suggest_atom_traits(d, codes, sub)
            return {"id": cfg_key, "scaling": scaling,
                    "channels": names, "k": d.k, "t0": d.t0,
                    "rmse": float(d.training_meta["rmse"]),
                    "suggestions": [
                        {"atom": s.atom, "usage": float(s.usage),
                         "trait": formats.trait_to_doc(Leaf(s.trait))}
                        for s in ranked]}

        doc = state.compute_once(state._suggestions, cfg_key, "suggestions", build)
        if top is not None:
            doc = {**doc, "suggestions": doc["suggestions"][:max(top, 0)]}
        return doc

    # --- static UI ------------------------------------------------------------------

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app

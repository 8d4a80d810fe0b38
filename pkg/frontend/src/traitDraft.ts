/** Client-side trait drafting: build, validate, compose, undo, probe.
 *
 * A draft holds one trait document plus its edit history. Validation
 * mirrors the service's document rules so most mistakes surface inline
 * before a request is made; anything the server still rejects comes
 * back as a 422 and is rendered next to the editor, never thrown at it.
 */

import { canonicalTraitJson } from "./canonical.js";
import type {
  Bound,
  BoxDoc,
  GroupDoc,
  PointDoc,
  PolygonDoc,
  SegmentTraitDoc,
  TraitDoc,
} from "./types.js";

const MAX_DEPTH = 64;

export class DraftError extends Error {
  constructor(
    message: string,
    readonly path: string = "$",
  ) {
    super(message);
    this.name = "DraftError";
  }
}

function fail(path: string, message: string): never {
  throw new DraftError(message, path);
}

function checkChannels(channels: unknown, path: string): string[] {
  if (!Array.isArray(channels) || channels.length === 0) {
    fail(path, "channels must be a non-empty list of names");
  }
  const names = channels as unknown[];
  for (const c of names) {
    if (typeof c !== "string" || c.length === 0) {
      fail(path, "channel names must be non-empty strings");
    }
  }
  if (new Set(names).size !== names.length) {
    fail(path, "channels must not repeat");
  }
  return names as string[];
}

function checkNumbers(
  values: unknown,
  count: number,
  path: string,
  what: string,
): number[] {
  if (!Array.isArray(values) || values.length !== count) {
    fail(path, `${what} must list one value per channel`);
  }
  for (const v of values as unknown[]) {
    if (typeof v !== "number" || !Number.isFinite(v)) {
      fail(path, `${what} must be finite numbers`);
    }
  }
  return values as number[];
}

/** Cross products around the loop; rejects reflex vertices and
 * star-shaped self-windings the same way the service does. */
function checkConvexCcw(vertices: [number, number][], path: string): void {
  const n = vertices.length;
  let turning = 0;
  for (let i = 0; i < n; i++) {
    const [ax, ay] = vertices[i] as [number, number];
    const [bx, by] = vertices[(i + 1) % n] as [number, number];
    const [cx, cy] = vertices[(i + 2) % n] as [number, number];
    const ux = bx - ax;
    const uy = by - ay;
    const vx = cx - bx;
    const vy = cy - by;
    const cross = ux * vy - uy * vx;
    if (cross <= 0) {
      fail(path, `polygon not strictly convex at vertex ${(i + 1) % n}`);
    }
    turning += Math.atan2(cross, ux * vx + uy * vy);
  }
  if (Math.abs(turning - 2 * Math.PI) > 1e-9) {
    fail(path, "polygon must wind around exactly once");
  }
}

export function validateTraitDoc(
  doc: unknown,
  path = "$",
  depth = 0,
): void {
  if (depth > MAX_DEPTH) {
    fail(path, `expression nested deeper than ${MAX_DEPTH}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    fail(path, "trait node must be a JSON object");
  }
  const d = doc as Record<string, unknown>;
  if ("kind" in d && "op" in d) {
    fail(path, "trait node cannot have both 'kind' and 'op'");
  }

  if ("op" in d) {
    const op = d["op"];
    if (op === "not") {
      if (!("child" in d)) fail(path, "'not' needs a child");
      validateTraitDoc(d["child"], `${path}.child`, depth + 1);
      return;
    }
    if (op === "and" || op === "or" || op === "product_l2") {
      const children = d["children"];
      if (!Array.isArray(children) || children.length === 0) {
        fail(path, `'${op}' needs at least one child`);
      }
      children.forEach((c, i) =>
        validateTraitDoc(c, `${path}.children[${i}]`, depth + 1),
      );
      return;
    }
    fail(path, `unknown op ${JSON.stringify(op)}`);
  }

  const kind = d["kind"];
  if (kind === "point") {
    const channels = checkChannels(d["channels"], `${path}.channels`);
    checkNumbers(d["coords"], channels.length, `${path}.coords`, "coords");
    return;
  }
  if (kind === "segment") {
    const channels = checkChannels(d["channels"], `${path}.channels`);
    checkNumbers(d["start"], channels.length, `${path}.start`, "start");
    checkNumbers(d["end"], channels.length, `${path}.end`, "end");
    return;
  }
  if (kind === "box") {
    const channels = checkChannels(d["channels"], `${path}.channels`);
    const intervals = d["intervals"];
    if (!Array.isArray(intervals) || intervals.length !== channels.length) {
      fail(path, "intervals must list one [lo, hi] per channel");
    }
    intervals.forEach((iv, i) => {
      const p = `${path}.intervals[${i}]`;
      if (!Array.isArray(iv) || iv.length !== 2) {
        fail(p, "interval must be [lo, hi]");
      }
      const [lo, hi] = iv as [unknown, unknown];
      for (const side of [lo, hi]) {
        if (side !== null && (typeof side !== "number" || Number.isNaN(side))) {
          fail(p, "interval ends must be numbers or null");
        }
      }
      if (
        typeof lo === "number" &&
        typeof hi === "number" &&
        lo > hi
      ) {
        fail(p, `interval has lo ${lo} > hi ${hi}`);
      }
    });
    return;
  }
  if (kind === "polygon") {
    const channels = checkChannels(d["channels"], `${path}.channels`);
    if (channels.length !== 2) {
      fail(`${path}.channels`, "polygon needs exactly 2 channels");
    }
    const vertices = d["vertices"];
    if (!Array.isArray(vertices) || vertices.length < 3) {
      fail(`${path}.vertices`, "polygon needs at least 3 vertices");
    }
    const verts: [number, number][] = [];
    vertices.forEach((v, i) => {
      if (
        !Array.isArray(v) ||
        v.length !== 2 ||
        typeof v[0] !== "number" ||
        typeof v[1] !== "number" ||
        !Number.isFinite(v[0]) ||
        !Number.isFinite(v[1])
      ) {
        fail(`${path}.vertices[${i}]`, "vertex must be [x, y]");
      }
      verts.push([v[0] as number, v[1] as number]);
    });
    checkConvexCcw(verts, `${path}.vertices`);
    return;
  }
  fail(path, `unknown kind ${JSON.stringify(kind)}`);
}

function clone<T>(doc: T): T {
  return JSON.parse(JSON.stringify(doc)) as T;
}

function signedArea(vertices: [number, number][]): number {
  let twice = 0;
  for (let i = 0; i < vertices.length; i++) {
    const [ax, ay] = vertices[i] as [number, number];
    const [bx, by] = vertices[(i + 1) % vertices.length] as [number, number];
    twice += ax * by - bx * ay;
  }
  return twice / 2;
}

// --------------------------------------------------------------------------
// document builders (validated on construction)

export function pointDoc(channels: string[], coords: number[]): PointDoc {
  const doc: PointDoc = { kind: "point", channels, coords };
  validateTraitDoc(doc);
  return doc;
}

export function segmentDoc(
  channels: string[],
  start: number[],
  end: number[],
): SegmentTraitDoc {
  const doc: SegmentTraitDoc = { kind: "segment", channels, start, end };
  validateTraitDoc(doc);
  return doc;
}

export function boxDoc(
  channels: string[],
  intervals: [Bound, Bound][],
): BoxDoc {
  const doc: BoxDoc = { kind: "box", channels, intervals };
  validateTraitDoc(doc);
  return doc;
}

/** Vertices may arrive in either orientation; clockwise input is
 * reversed before the strict convexity check, so only genuinely reflex
 * or self-winding shapes are rejected. */
export function polygonDoc(
  channels: [string, string],
  vertices: [number, number][],
): PolygonDoc {
  let verts = vertices.map((v) => [v[0], v[1]] as [number, number]);
  if (verts.length >= 3 && signedArea(verts) < 0) {
    verts = verts.reverse();
  }
  const doc: PolygonDoc = { kind: "polygon", channels, vertices: verts };
  validateTraitDoc(doc);
  return doc;
}

// --------------------------------------------------------------------------
// preview probe

export class ProbeUnavailable extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProbeUnavailable";
  }
}

function probeValue(name: string, point: Record<string, number>): number {
  const v = point[name];
  if (v === undefined) {
    throw new ProbeUnavailable(`probe point has no value for channel '${name}'`);
  }
  return v;
}

function segmentDistance(
  x: number[],
  start: number[],
  end: number[],
): number {
  let dd = 0;
  let dx = 0;
  for (let i = 0; i < x.length; i++) {
    const d = (end[i] as number) - (start[i] as number);
    dd += d * d;
    dx += d * ((x[i] as number) - (start[i] as number));
  }
  const t = dd === 0 ? 0 : Math.min(1, Math.max(0, dx / dd));
  let sq = 0;
  for (let i = 0; i < x.length; i++) {
    const p = (start[i] as number) + t * ((end[i] as number) - (start[i] as number));
    sq += ((x[i] as number) - p) ** 2;
  }
  return Math.sqrt(sq);
}

function polygonDistance(
  px: number,
  py: number,
  vertices: [number, number][],
): number {
  let inside = true;
  let best = Infinity;
  const n = vertices.length;
  for (let i = 0; i < n; i++) {
    const [ax, ay] = vertices[i] as [number, number];
    const [bx, by] = vertices[(i + 1) % n] as [number, number];
    if ((bx - ax) * (py - ay) - (by - ay) * (px - ax) < 0) inside = false;
    best = Math.min(
      best,
      segmentDistance([px, py], [ax, ay], [bx, by]),
    );
  }
  return inside ? 0 : best;
}

/** Distance from an attribute-space point to the draft's trait.
 *
 * A preview affordance for the editor only: the numbers shown on
 * segmentations always come from the service. Composition follows the
 * chosen semantics; 'not' has no pointwise distance (the service
 * derives it from the whole field) and is reported as unavailable.
 */
export function probeDistance(
  doc: TraitDoc,
  point: Record<string, number>,
  semantics: "csg" | "paper_literal" = "csg",
): number {
  if ("op" in doc) {
    if (doc.op === "not") {
      throw new ProbeUnavailable(
        "'not' distances depend on the whole field; run the query to see them",
      );
    }
    const parts = doc.children.map((c) => probeDistance(c, point, semantics));
    if (doc.op === "product_l2") {
      return Math.sqrt(parts.reduce((s, p) => s + p * p, 0));
    }
    const wantMax = (doc.op === "and") === (semantics === "csg");
    return wantMax ? Math.max(...parts) : Math.min(...parts);
  }
  const x = doc.channels.map((c) => probeValue(c, point));
  switch (doc.kind) {
    case "point": {
      let sq = 0;
      for (let i = 0; i < x.length; i++) {
        sq += ((x[i] as number) - (doc.coords[i] as number)) ** 2;
      }
      return Math.sqrt(sq);
    }
    case "segment":
      return segmentDistance(x, doc.start, doc.end);
    case "box": {
      let sq = 0;
      for (let i = 0; i < x.length; i++) {
        const [lo, hi] = doc.intervals[i] as [Bound, Bound];
        const v = x[i] as number;
        if (lo !== null && v < lo) sq += (lo - v) ** 2;
        else if (hi !== null && v > hi) sq += (v - hi) ** 2;
      }
      return Math.sqrt(sq);
    }
    case "polygon":
      return polygonDistance(x[0] as number, x[1] as number, doc.vertices);
  }
}

// --------------------------------------------------------------------------
// the draft itself

export class TraitDraft {
  private history: TraitDoc[] = [];
  private current: TraitDoc | null;

  constructor(initial: TraitDoc | null = null) {
    if (initial !== null) validateTraitDoc(initial);
    this.current = initial === null ? null : clone(initial);
  }

  get empty(): boolean {
    return this.current === null;
  }

  get depth(): number {
    return this.history.length;
  }

  /** The current document; callers get a copy they cannot corrupt. */
  doc(): TraitDoc {
    if (this.current === null) {
      throw new DraftError("draft is empty");
    }
    return clone(this.current);
  }

  /** Replace the document, remembering the previous one for undo. */
  apply(doc: TraitDoc): void {
    validateTraitDoc(doc);
    if (this.current !== null) this.history.push(this.current);
    this.current = clone(doc);
  }

  /** Wrap the current document and another one under a boolean op. */
  group(op: GroupDoc["op"], other: TraitDoc): void {
    this.apply({ op, children: [this.doc(), clone(other)] });
  }

  negate(): void {
    this.apply({ op: "not", child: this.doc() });
  }

  undo(): boolean {
    const prev = this.history.pop();
    if (prev === undefined) return false;
    this.current = prev;
    return true;
  }

  canonical(): string {
    return canonicalTraitJson(this.doc());
  }

  probe(
    point: Record<string, number>,
    semantics: "csg" | "paper_literal" = "csg",
  ): number {
    return probeDistance(this.doc(), point, semantics);
  }
}

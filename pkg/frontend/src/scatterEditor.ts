/** Drawing traits over the channel-pair density scatterplot.
 *
 * The editor works in data coordinates; the DOM layer converts mouse
 * pixels with the plot transform first. Boxes come from a drag, points
 * from a click, polygons from a vertex-by-vertex click path closed at
 * the end (convexity enforced on close). Box intervals stay editable
 * afterwards as per-channel range sliders.
 */

import { boxDoc, DraftError, pointDoc, polygonDoc } from "./traitDraft.js";
import type { Bound, BoxDoc, PointDoc, PolygonDoc, ScatterData } from "./types.js";

export type EditMode = "box" | "point" | "polygon";

export interface PlotTransform {
  width: number;
  height: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function transformFromScatter(
  s: ScatterData,
  width: number,
  height: number,
): PlotTransform {
  return {
    width,
    height,
    xMin: s.x_edges[0] as number,
    xMax: s.x_edges[s.x_edges.length - 1] as number,
    yMin: s.y_edges[0] as number,
    yMax: s.y_edges[s.y_edges.length - 1] as number,
  };
}

/** Pixel -> data; the vertical axis is flipped (pixel 0 is the top). */
export function pixelToData(
  t: PlotTransform,
  px: number,
  py: number,
): [number, number] {
  const x = t.xMin + (px / t.width) * (t.xMax - t.xMin);
  const y = t.yMax - (py / t.height) * (t.yMax - t.yMin);
  return [x, y];
}

export function dataToPixel(
  t: PlotTransform,
  x: number,
  y: number,
): [number, number] {
  const px = ((x - t.xMin) / (t.xMax - t.xMin)) * t.width;
  const py = ((t.yMax - y) / (t.yMax - t.yMin)) * t.height;
  return [px, py];
}

/** Log-compressed density in screen layout: row 0 = highest y bin. */
export function intensityGrid(s: ScatterData): number[][] {
  let peak = 0;
  for (const col of s.counts) {
    for (const c of col) peak = Math.max(peak, c);
  }
  const norm = Math.log1p(peak);
  const grid: number[][] = [];
  for (let row = 0; row < s.bins; row++) {
    const iy = s.bins - 1 - row;
    const line: number[] = [];
    for (let ix = 0; ix < s.bins; ix++) {
      const c = (s.counts[ix] as number[])[iy] as number;
      line.push(norm === 0 ? 0 : Math.log1p(c) / norm);
    }
    grid.push(line);
  }
  return grid;
}

/** The densest cell and the data rectangle it covers. */
export function densestCell(s: ScatterData): {
  ix: number;
  iy: number;
  count: number;
  rect: [number, number, number, number]; // x0, x1, y0, y1
} {
  let best = { ix: 0, iy: 0, count: -1 };
  for (let ix = 0; ix < s.bins; ix++) {
    for (let iy = 0; iy < s.bins; iy++) {
      const c = (s.counts[ix] as number[])[iy] as number;
      if (c > best.count) best = { ix, iy, count: c };
    }
  }
  return {
    ...best,
    rect: [
      s.x_edges[best.ix] as number,
      s.x_edges[best.ix + 1] as number,
      s.y_edges[best.iy] as number,
      s.y_edges[best.iy + 1] as number,
    ],
  };
}

/** Replace one channel's interval in a box document (slider edits). */
export function withInterval(
  doc: BoxDoc,
  channelIndex: number,
  lo: Bound,
  hi: Bound,
): BoxDoc {
  if (channelIndex < 0 || channelIndex >= doc.intervals.length) {
    throw new DraftError(`box has no interval ${channelIndex}`);
  }
  const intervals = doc.intervals.map(
    (iv, i) => (i === channelIndex ? [lo, hi] : [iv[0], iv[1]]) as [Bound, Bound],
  );
  return boxDoc(doc.channels.slice(), intervals);
}

export interface DragPreview {
  kind: "drag";
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export interface PolygonPreview {
  kind: "polygon";
  vertices: [number, number][];
}

export type Preview = DragPreview | PolygonPreview | null;

export class ScatterEditor {
  mode: EditMode = "box";
  private dragFrom: [number, number] | null = null;
  private dragTo: [number, number] | null = null;
  private polyVertices: [number, number][] = [];

  constructor(public channels: [string, string]) {}

  /** Start a box drag at a data-space position. */
  beginDrag(x: number, y: number): void {
    if (this.mode !== "box") return;
    this.dragFrom = [x, y];
    this.dragTo = [x, y];
  }

  updateDrag(x: number, y: number): void {
    if (this.dragFrom !== null) this.dragTo = [x, y];
  }

  /** Finish the drag; returns the box document it drew. */
  endDrag(x: number, y: number): BoxDoc | null {
    if (this.dragFrom === null) return null;
    const [x0, y0] = this.dragFrom;
    this.dragFrom = null;
    this.dragTo = null;
    const xs: [number, number] = x0 <= x ? [x0, x] : [x, x0];
    const ys: [number, number] = y0 <= y ? [y0, y] : [y, y0];
    return boxDoc(this.channels.slice(), [xs, ys]);
  }

  /** A click in point mode picks the trait's coordinates directly. */
  clickPoint(x: number, y: number): PointDoc | null {
    if (this.mode !== "point") return null;
    return pointDoc(this.channels.slice(), [x, y]);
  }

  addVertex(x: number, y: number): void {
    if (this.mode !== "polygon") return;
    this.polyVertices.push([x, y]);
  }

  get pendingVertices(): number {
    return this.polyVertices.length;
  }

  /** Close the polygon; reflex shapes raise DraftError for inline display. */
  closePolygon(): PolygonDoc {
    const verts = this.polyVertices;
    if (verts.length < 3) {
      throw new DraftError(
        `polygon needs at least 3 vertices, have ${verts.length}`,
      );
    }
    const doc = polygonDoc(this.channels, verts.map((v) => [v[0], v[1]]));
    this.polyVertices = [];
    return doc;
  }

  cancel(): void {
    this.dragFrom = null;
    this.dragTo = null;
    this.polyVertices = [];
  }

  preview(): Preview {
    if (this.dragFrom !== null && this.dragTo !== null) {
      const [x0, y0] = this.dragFrom;
      const [x1, y1] = this.dragTo;
      return {
        kind: "drag",
        x0: Math.min(x0, x1),
        x1: Math.max(x0, x1),
        y0: Math.min(y0, y1),
        y1: Math.max(y0, y1),
      };
    }
    if (this.polyVertices.length > 0) {
      return { kind: "polygon", vertices: this.polyVertices.slice() };
    }
    return null;
  }
}

/** Browser entry point: wires the pure models to the DOM.
 *
 * Interaction loop: pick a channel pair, draw a trait on the density
 * scatter (or edit its intervals with the sliders, or start from a
 * dictionary suggestion), save it, run a segmentation query, then read
 * the result through the legend, the slice view and the tree strip to
 * decide the next edit.
 */

import { ApiClient, ApiError, RequestGate } from "./api.js";
import { BACKGROUND_COLOR, grayRgb, segmentRgb } from "./colors.js";
import { buildLegend, formatValue } from "./legend.js";
import {
  ScatterEditor,
  dataToPixel,
  densestCell,
  intensityGrid,
  pixelToData,
  transformFromScatter,
  withInterval,
  type PlotTransform,
} from "./scatterEditor.js";
import { axisExtent, pickAt } from "./slicePicker.js";
import { ProbeUnavailable, TraitDraft, boxDoc } from "./traitDraft.js";
import { buildBars, thresholdForBar, type Bar } from "./treeStrip.js";
import type {
  BoxDoc,
  DatasetInfo,
  ScatterData,
  SegmentsResponse,
  SlicePayload,
  TraitDoc,
} from "./types.js";
import { StaleSegmentation, ViewState } from "./viewState.js";

const SCATTER_SIZE = 360;
const SLICE_SIZE = 360;
const TREE_STRIP_HEIGHT = 90;

const api = new ApiClient("");
const view = new ViewState();
const draft = new TraitDraft();
const scatterGate = new RequestGate();
const sliceGate = new RequestGate();

let dataset: DatasetInfo | null = null;
let scatter: ScatterData | null = null;
let transform: PlotTransform | null = null;
let editor: ScatterEditor | null = null;
let savedTrait: string | null = null;
let fieldSlice: SlicePayload | null = null;
let labelSlice: SlicePayload | null = null;
let report: SegmentsResponse | null = null;
let bars: Bar[] = [];
let combine: "replace" | "and" | "or" = "replace";

// --------------------------------------------------------------------------
// tiny DOM helpers

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (HTMLElement | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  for (const c of children) node.append(c);
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(id: string, text: string, isError = false): void {
  const node = byId<HTMLElement>(id);
  node.textContent = text;
  node.classList.toggle("error", isError);
}

function describeError(e: unknown): string {
  if (e instanceof ApiError) {
    const detail = e.errors.map((x) => `${x.path}: ${x.message}`).join("; ");
    return detail ? `${e.message} (${detail})` : e.message;
  }
  if (e instanceof Error) return e.message;
  return String(e);
}

// --------------------------------------------------------------------------
// layout

function buildLayout(): void {
  const root = byId<HTMLDivElement>("app");
  root.append(
    el("div", { class: "panel", id: "panel-dataset" },
      el("h2", {}, "dataset"),
      el("div", { id: "dataset-info" }, "loading...")),
    el("div", { class: "panel" },
      el("h2", {}, "attribute scatter"),
      el("div", { class: "row" },
        el("select", { id: "chan-x" }),
        el("select", { id: "chan-y" }),
        el("select", { id: "draw-mode" },
          el("option", { value: "box" }, "box"),
          el("option", { value: "point" }, "point"),
          el("option", { value: "polygon" }, "polygon")),
        el("button", { id: "close-poly" }, "close polygon"),
      ),
      el("canvas", {
        id: "scatter-canvas",
        width: String(SCATTER_SIZE),
        height: String(SCATTER_SIZE),
      }),
      el("div", { class: "hint" },
        "drag = box, click = point/polygon vertex, alt-click = probe"),
      el("div", { id: "scatter-status" }),
      el("div", { id: "sliders" })),
    el("div", { class: "panel" },
      el("h2", {}, "trait"),
      el("div", { class: "row" },
        el("select", { id: "combine" },
          el("option", { value: "replace" }, "replace draft"),
          el("option", { value: "and" }, "and with draft"),
          el("option", { value: "or" }, "or with draft")),
        el("select", { id: "semantics" },
          el("option", { value: "csg" }, "csg"),
          el("option", { value: "paper_literal" }, "literal")),
        el("button", { id: "undo" }, "undo"),
        el("button", { id: "negate" }, "not")),
      el("pre", { id: "trait-json" }, "(empty)"),
      el("div", { class: "row" },
        el("input", { id: "trait-name", value: "trait-1" }),
        el("button", { id: "save-trait" }, "save"),
        el("button", { id: "suggest" }, "suggest from dictionary")),
      el("div", { id: "trait-status" }),
      el("div", { id: "suggestions" })),
    el("div", { class: "panel" },
      el("h2", {}, "query"),
      el("div", { class: "row" },
        el("select", { id: "method" },
          el("option", { value: "crown" }, "crown"),
          el("option", { value: "branch_decomposition" }, "branches"),
          el("option", { value: "leaf_arcs" }, "leaf arcs"),
          el("option", { value: "subtrees" }, "subtrees")),
        el("label", {}, "threshold ",
          el("input", { id: "threshold", type: "number", value: "0", step: "any" })),
        el("label", {}, "cut ",
          el("input", { id: "cut-level", type: "number", value: "0", step: "any" })),
        el("label", {}, "delta ",
          el("input", { id: "delta", type: "number", value: "0.5", step: "any" })),
        el("button", { id: "run-query" }, "run")),
      el("div", { id: "query-status" }),
      el("canvas", {
        id: "tree-strip",
        width: String(SLICE_SIZE),
        height: String(TREE_STRIP_HEIGHT),
      }),
      el("div", { class: "hint" }, "bars: persistence pairs; click to set threshold")),
    el("div", { class: "panel" },
      el("h2", {}, "segments"),
      el("div", { id: "legend" }),
      el("div", { class: "row" },
        el("select", { id: "slice-axis" },
          el("option", { value: "z" }, "z"),
          el("option", { value: "y" }, "y"),
          el("option", { value: "x" }, "x")),
        el("input", { id: "slice-index", type: "range", min: "0", max: "0", value: "0" }),
        el("span", { id: "slice-label" }, "0")),
      el("canvas", {
        id: "slice-canvas",
        width: String(SLICE_SIZE),
        height: String(SLICE_SIZE),
      }),
      el("div", { id: "slice-status" })),
  );
}

// --------------------------------------------------------------------------
// scatter rendering and editing

async function refreshScatter(): Promise<void> {
  if (!dataset) return;
  const tag = scatterGate.issue();
  try {
    const s = await api.scatter(view.channelX, view.channelY, 128);
    if (!scatterGate.accept(tag)) return;
    scatter = s;
    transform = transformFromScatter(s, SCATTER_SIZE, SCATTER_SIZE);
    editor = new ScatterEditor([view.channelX, view.channelY]);
    const mode = byId<HTMLSelectElement>("draw-mode").value;
    editor.mode = mode as ScatterEditor["mode"];
    setStatus("scatter-status", s.sampling);
    drawScatter();
  } catch (e) {
    setStatus("scatter-status", describeError(e), true);
  }
}

function drawScatter(): void {
  const canvas = byId<HTMLCanvasElement>("scatter-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx || !scatter || !transform) return;
  const grid = intensityGrid(scatter);
  const off = document.createElement("canvas");
  off.width = scatter.bins;
  off.height = scatter.bins;
  const offCtx = off.getContext("2d");
  if (!offCtx) return;
  const img = offCtx.createImageData(scatter.bins, scatter.bins);
  for (let r = 0; r < scatter.bins; r++) {
    for (let c = 0; c < scatter.bins; c++) {
      const [gr, gg, gb] = grayRgb((grid[r] as number[])[c] as number);
      const o = (r * scatter.bins + c) * 4;
      img.data[o] = gr;
      img.data[o + 1] = gg;
      img.data[o + 2] = gb;
      img.data[o + 3] = 255;
    }
  }
  offCtx.putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
  drawTraitOverlay(ctx);
  drawEditorPreview(ctx);
}

function strokeBox(
  ctx: CanvasRenderingContext2D,
  doc: BoxDoc,
  t: PlotTransform,
): void {
  const [ix, iy] = [doc.intervals[0], doc.intervals[1]];
  if (!ix || !iy) return;
  const x0 = ix[0] ?? t.xMin;
  const x1 = ix[1] ?? t.xMax;
  const y0 = iy[0] ?? t.yMin;
  const y1 = iy[1] ?? t.yMax;
  const [px0, py1] = dataToPixel(t, x0, y0);
  const [px1, py0] = dataToPixel(t, x1, y1);
  ctx.strokeRect(px0, py0, px1 - px0, py1 - py0);
}

function drawDocOutline(
  ctx: CanvasRenderingContext2D,
  doc: TraitDoc,
  t: PlotTransform,
): void {
  if ("op" in doc) {
    if (doc.op === "not") {
      drawDocOutline(ctx, doc.child, t);
    } else {
      for (const c of doc.children) drawDocOutline(ctx, c, t);
    }
    return;
  }
  // only primitives on the currently plotted channel pair are drawable
  if (
    doc.channels.length !== 2 ||
    doc.channels[0] !== view.channelX ||
    doc.channels[1] !== view.channelY
  ) {
    return;
  }
  if (doc.kind === "box") {
    strokeBox(ctx, doc, t);
  } else if (doc.kind === "point") {
    const [px, py] = dataToPixel(t, doc.coords[0] as number, doc.coords[1] as number);
    ctx.beginPath();
    ctx.arc(px, py, 4, 0, 2 * Math.PI);
    ctx.stroke();
  } else if (doc.kind === "polygon") {
    ctx.beginPath();
    doc.vertices.forEach(([x, y], i) => {
      const [px, py] = dataToPixel(t, x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.stroke();
  } else {
    const [sx, sy] = dataToPixel(t, doc.start[0] as number, doc.start[1] as number);
    const [ex, ey] = dataToPixel(t, doc.end[0] as number, doc.end[1] as number);
    ctx.beginPath();
    ctx.moveTo(sx, sy);
    ctx.lineTo(ex, ey);
    ctx.stroke();
  }
}

function drawTraitOverlay(ctx: CanvasRenderingContext2D): void {
  if (draft.empty || !transform) return;
  ctx.strokeStyle = "#ffcb4d";
  ctx.lineWidth = 1.5;
  drawDocOutline(ctx, draft.doc(), transform);
}

function drawEditorPreview(ctx: CanvasRenderingContext2D): void {
  if (!editor || !transform) return;
  const p = editor.preview();
  if (!p) return;
  ctx.strokeStyle = "#6fd3ff";
  ctx.setLineDash([4, 3]);
  if (p.kind === "drag") {
    const [px0, py1] = dataToPixel(transform, p.x0, p.y0);
    const [px1, py0] = dataToPixel(transform, p.x1, p.y1);
    ctx.strokeRect(px0, py0, px1 - px0, py1 - py0);
  } else {
    ctx.beginPath();
    p.vertices.forEach(([x, y], i) => {
      const [px, py] = dataToPixel(transform as PlotTransform, x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function applyDrawn(doc: TraitDoc): void {
  try {
    if (combine === "replace" || draft.empty) {
      draft.apply(doc);
    } else {
      draft.group(combine, doc);
    }
    renderTrait();
    setStatus("trait-status", "");
  } catch (e) {
    setStatus("trait-status", describeError(e), true);
  }
  drawScatter();
}

function wireScatter(): void {
  const canvas = byId<HTMLCanvasElement>("scatter-canvas");
  const toData = (ev: MouseEvent): [number, number] | null => {
    if (!transform) return null;
    const r = canvas.getBoundingClientRect();
    return pixelToData(transform, ev.clientX - r.left, ev.clientY - r.top);
  };
  canvas.addEventListener("mousedown", (ev) => {
    const d = toData(ev);
    if (!d || !editor || ev.altKey) return;
    if (editor.mode === "box") editor.beginDrag(d[0], d[1]);
  });
  canvas.addEventListener("mousemove", (ev) => {
    const d = toData(ev);
    if (!d || !editor) return;
    editor.updateDrag(d[0], d[1]);
    drawScatter();
  });
  canvas.addEventListener("mouseup", (ev) => {
    const d = toData(ev);
    if (!d || !editor) return;
    if (ev.altKey) {
      probeAt(d);
      return;
    }
    if (editor.mode === "box") {
      const doc = editor.endDrag(d[0], d[1]);
      if (doc) applyDrawn(doc);
    } else if (editor.mode === "point") {
      const doc = editor.clickPoint(d[0], d[1]);
      if (doc) applyDrawn(doc);
    } else {
      editor.addVertex(d[0], d[1]);
      drawScatter();
    }
  });
  byId<HTMLButtonElement>("close-poly").addEventListener("click", () => {
    if (!editor) return;
    try {
      applyDrawn(editor.closePolygon());
    } catch (e) {
      setStatus("trait-status", describeError(e), true);
      drawScatter();
    }
  });
  byId<HTMLSelectElement>("draw-mode").addEventListener("change", (ev) => {
    if (!editor) return;
    editor.cancel();
    editor.mode = (ev.target as HTMLSelectElement).value as ScatterEditor["mode"];
    drawScatter();
  });
}

function probeAt(d: [number, number]): void {
  if (draft.empty) {
    setStatus("trait-status", "no draft to probe");
    return;
  }
  try {
    const dist = draft.probe(
      { [view.channelX]: d[0], [view.channelY]: d[1] },
      view.semantics,
    );
    setStatus(
      "trait-status",
      `probe at (${formatValue(d[0])}, ${formatValue(d[1])}): distance ${formatValue(dist)}`,
    );
  } catch (e) {
    if (e instanceof ProbeUnavailable) setStatus("trait-status", e.message);
    else setStatus("trait-status", describeError(e), true);
  }
}

// --------------------------------------------------------------------------
// trait panel

function renderTrait(): void {
  const pre = byId<HTMLPreElement>("trait-json");
  pre.textContent = draft.empty
    ? "(empty)"
    : JSON.stringify(draft.doc(), null, 1);
  renderSliders();
}

function renderSliders(): void {
  const host = byId<HTMLDivElement>("sliders");
  host.textContent = "";
  if (draft.empty) return;
  const doc = draft.doc();
  if (!("kind" in doc) || doc.kind !== "box") return;
  doc.intervals.forEach((iv, i) => {
    const lo = el("input", {
      type: "number",
      step: "any",
      value: iv[0] === null ? "" : String(iv[0]),
      placeholder: "-inf",
    });
    const hi = el("input", {
      type: "number",
      step: "any",
      value: iv[1] === null ? "" : String(iv[1]),
      placeholder: "+inf",
    });
    const onEdit = () => {
      try {
        const next = withInterval(
          doc,
          i,
          lo.value === "" ? null : Number(lo.value),
          hi.value === "" ? null : Number(hi.value),
        );
        draft.apply(next);
        renderTrait();
        drawScatter();
        setStatus("trait-status", "");
      } catch (e) {
        setStatus("trait-status", describeError(e), true);
      }
    };
    lo.addEventListener("change", onEdit);
    hi.addEventListener("change", onEdit);
    host.append(
      el("div", { class: "row" }, el("span", {}, doc.channels[i] as string), lo, hi),
    );
  });
}

async function saveTrait(): Promise<void> {
  if (draft.empty) {
    setStatus("trait-status", "draw a trait first", true);
    return;
  }
  const name = byId<HTMLInputElement>("trait-name").value.trim() || "trait-1";
  try {
    await api.putTrait(name, draft.doc());
    const stored = await api.traitText(name);
    const roundTrip = stored === draft.canonical() ? "byte-identical" : "normalized";
    savedTrait = name;
    setStatus("trait-status", `saved '${name}' (${roundTrip}); ready to query`);
    await refreshTreeStrip();
    await refreshSlice();
  } catch (e) {
    setStatus("trait-status", describeError(e), true);
  }
}

async function loadSuggestions(): Promise<void> {
  const host = byId<HTMLDivElement>("suggestions");
  host.textContent = "learning dictionary...";
  try {
    const s = await api.suggestions({ top: 5 });
    host.textContent = "";
    s.suggestions.forEach((sug) => {
      const btn = el(
        "button",
        {},
        `atom ${sug.atom} (usage ${formatValue(sug.usage)})`,
      );
      btn.addEventListener("click", () => {
        try {
          draft.apply(sug.trait);
          renderTrait();
          drawScatter();
          setStatus("trait-status", `loaded suggestion for atom ${sug.atom}`);
        } catch (e) {
          setStatus("trait-status", describeError(e), true);
        }
      });
      host.append(btn);
    });
  } catch (e) {
    host.textContent = "";
    setStatus("trait-status", describeError(e), true);
  }
}

// --------------------------------------------------------------------------
// query, legend, tree strip

function readControls(): void {
  view.controls.method = byId<HTMLSelectElement>("method")
    .value as ViewState["controls"]["method"];
  view.controls.threshold = Number(byId<HTMLInputElement>("threshold").value);
  view.controls.cutLevel = Number(byId<HTMLInputElement>("cut-level").value);
  view.controls.delta = Number(byId<HTMLInputElement>("delta").value);
  view.semantics = byId<HTMLSelectElement>("semantics")
    .value as ViewState["semantics"];
}

async function runQuery(): Promise<void> {
  if (!savedTrait) {
    setStatus("query-status", "save a trait first", true);
    return;
  }
  readControls();
  try {
    const res = await api.query(savedTrait, view.querySpec());
    report = await api.segments(res.id);
    view.setReport(res.id, report.segments);
    setStatus(
      "query-status",
      `${res.n_segments} segment(s), id ${res.id}${res.cached ? " (cached)" : ""}`,
    );
    renderLegend();
    await refreshSlice();
  } catch (e) {
    setStatus("query-status", describeError(e), true);
  }
}

function renderLegend(): void {
  const host = byId<HTMLDivElement>("legend");
  host.textContent = "";
  if (!report) return;
  for (const entry of buildLegend(report.segments, view)) {
    const btn = el("button", { class: "legend-btn" }, `${entry.id}: ${entry.label}`);
    btn.style.background = entry.visible ? entry.color : BACKGROUND_COLOR;
    btn.style.outline = entry.selected ? "2px solid white" : "none";
    btn.title = `${entry.vertexCount} vertices, group ${entry.group}`;
    btn.addEventListener("click", () => {
      try {
        view.toggle(entry.id);
        renderLegend();
        drawSlice();
      } catch (e) {
        if (e instanceof StaleSegmentation) {
          setStatus("query-status", e.message, true);
        }
      }
    });
    host.append(btn);
  }
}

async function refreshTreeStrip(): Promise<void> {
  if (!savedTrait) return;
  try {
    const tree = await api.tree(savedTrait);
    bars = buildBars(tree);
    drawTreeStrip();
  } catch (e) {
    setStatus("query-status", describeError(e), true);
  }
}

function drawTreeStrip(): void {
  const canvas = byId<HTMLCanvasElement>("tree-strip");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (bars.length === 0) return;
  const w = canvas.width / Math.min(bars.length, 64);
  bars.slice(0, 64).forEach((bar, i) => {
    const h = Math.max(2, bar.height * (canvas.height - 4));
    ctx.fillStyle = bar.essential ? "#ffcb4d" : "#6fd3ff";
    ctx.fillRect(i * w + 1, canvas.height - h, Math.max(1, w - 2), h);
  });
}

function wireTreeStrip(): void {
  const canvas = byId<HTMLCanvasElement>("tree-strip");
  canvas.addEventListener("click", (ev) => {
    if (bars.length === 0) return;
    const r = canvas.getBoundingClientRect();
    const w = canvas.width / Math.min(bars.length, 64);
    const i = Math.floor((ev.clientX - r.left) / w);
    if (i < 0 || i >= Math.min(bars.length, 64)) return;
    const t = thresholdForBar(bars, i);
    byId<HTMLInputElement>("threshold").value = String(t);
    setStatus("query-status", `threshold set to ${formatValue(t)}`);
  });
}

// --------------------------------------------------------------------------
// slice view

async function refreshSlice(): Promise<void> {
  if (!dataset || !savedTrait) return;
  const tag = sliceGate.issue();
  try {
    const field = await api.fieldSlice(savedTrait, view.sliceAxis, view.sliceIndex);
    const labels = view.activeSegmentation
      ? await api.segmentsSlice(view.activeSegmentation, view.sliceAxis, view.sliceIndex)
      : null;
    if (!sliceGate.accept(tag)) return;
    fieldSlice = field;
    labelSlice = labels;
    drawSlice();
    setStatus("slice-status", "");
  } catch (e) {
    setStatus("slice-status", describeError(e), true);
  }
}

function drawSlice(): void {
  const canvas = byId<HTMLCanvasElement>("slice-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!fieldSlice) return;
  const [rows, cols] = fieldSlice.shape;
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of fieldSlice.values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi > lo ? hi - lo : 1;
  const off = document.createElement("canvas");
  off.width = cols;
  off.height = rows;
  const offCtx = off.getContext("2d");
  if (!offCtx) return;
  const img = offCtx.createImageData(cols, rows);
  for (let i = 0; i < rows * cols; i++) {
    const t = ((fieldSlice.values[i] as number) - lo) / span;
    let [r, g, b] = grayRgb(1 - t); // near the trait = bright
    if (labelSlice) {
      const label = labelSlice.values[i] as number;
      if (label >= 0 && view.isVisible(label)) {
        const [sr, sg, sb] = segmentRgb(label);
        const a = view.selectedSegment === label ? 1.0 : 0.65;
        r = Math.round(a * sr + (1 - a) * r);
        g = Math.round(a * sg + (1 - a) * g);
        b = Math.round(a * sb + (1 - a) * b);
      }
    }
    const o = i * 4;
    img.data[o] = r;
    img.data[o + 1] = g;
    img.data[o + 2] = b;
    img.data[o + 3] = 255;
  }
  offCtx.putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function wireSlice(): void {
  const canvas = byId<HTMLCanvasElement>("slice-canvas");
  canvas.addEventListener("click", (ev) => {
    if (!labelSlice || !dataset) {
      setStatus("slice-status", "run a query to pick segments");
      return;
    }
    const r = canvas.getBoundingClientRect();
    const pick = pickAt(
      labelSlice,
      dataset.grid.dims,
      ev.clientX - r.left,
      ev.clientY - r.top,
      canvas.width,
      canvas.height,
    );
    if (!pick) return;
    try {
      const res = view.clickLabel(pick.value);
      setStatus(
        "slice-status",
        `${res.status} (vertex ${pick.vertex})`,
      );
      renderLegend();
      drawSlice();
    } catch (e) {
      if (e instanceof StaleSegmentation) {
        setStatus("slice-status", e.message, true);
      }
    }
  });
  const axisSel = byId<HTMLSelectElement>("slice-axis");
  const idx = byId<HTMLInputElement>("slice-index");
  const update = async () => {
    if (!dataset) return;
    const axis = axisSel.value as "x" | "y" | "z";
    const extent = axisExtent(dataset.grid.dims, axis);
    idx.max = String(extent - 1);
    const index = Math.min(Number(idx.value), extent - 1);
    idx.value = String(index);
    byId<HTMLSpanElement>("slice-label").textContent = String(index);
    view.setSlice(axis, index); // selection survives scrubbing
    await refreshSlice();
  };
  axisSel.addEventListener("change", update);
  idx.addEventListener("input", update);
}

// --------------------------------------------------------------------------
// boot

function renderDatasetInfo(): void {
  if (!dataset) return;
  const g = dataset.grid;
  byId<HTMLDivElement>("dataset-info").textContent =
    `${g.dims.join(" x ")} grid, ${g.connectivity}, ` +
    `${dataset.channels.length} channels, semantics ${dataset.semantics}`;
}

function fillChannelSelects(): void {
  if (!dataset) return;
  const names = dataset.channels.map((c) => c.name);
  const selX = byId<HTMLSelectElement>("chan-x");
  const selY = byId<HTMLSelectElement>("chan-y");
  for (const sel of [selX, selY]) {
    sel.textContent = "";
    for (const n of names) sel.append(el("option", { value: n }, n));
  }
  selX.value = names[0] as string;
  selY.value = (names[1] ?? names[0]) as string;
  view.channelX = selX.value;
  view.channelY = selY.value;
  const onChange = async () => {
    view.channelX = selX.value;
    view.channelY = selY.value;
    await refreshScatter();
  };
  selX.addEventListener("change", onChange);
  selY.addEventListener("change", onChange);
}

async function boot(): Promise<void> {
  buildLayout();
  wireScatter();
  wireSlice();
  wireTreeStrip();
  byId<HTMLButtonElement>("undo").addEventListener("click", () => {
    if (draft.undo()) {
      renderTrait();
      drawScatter();
      setStatus("trait-status", "undid last edit");
    } else {
      setStatus("trait-status", "nothing to undo");
    }
  });
  byId<HTMLButtonElement>("negate").addEventListener("click", () => {
    try {
      draft.negate();
      renderTrait();
      drawScatter();
    } catch (e) {
      setStatus("trait-status", describeError(e), true);
    }
  });
  byId<HTMLSelectElement>("combine").addEventListener("change", (ev) => {
    combine = (ev.target as HTMLSelectElement).value as typeof combine;
  });
  byId<HTMLButtonElement>("save-trait").addEventListener("click", () => {
    void saveTrait();
  });
  byId<HTMLButtonElement>("suggest").addEventListener("click", () => {
    void loadSuggestions();
  });
  byId<HTMLButtonElement>("run-query").addEventListener("click", () => {
    void runQuery();
  });
  try {
    dataset = await api.dataset();
    renderDatasetInfo();
    fillChannelSelects();
    const extent = axisExtent(dataset.grid.dims, view.sliceAxis);
    byId<HTMLInputElement>("slice-index").max = String(extent - 1);
    await refreshScatter();
    // a starter box around the densest scatter cell, ready to refine
    if (scatter) {
      const dense = densestCell(scatter);
      try {
        draft.apply(
          boxDoc(
            [view.channelX, view.channelY],
            [
              [dense.rect[0], dense.rect[1]],
              [dense.rect[2], dense.rect[3]],
            ],
          ),
        );
        renderTrait();
        drawScatter();
      } catch (e) {
        setStatus("trait-status", describeError(e), true);
      }
    }
  } catch (e) {
    setStatus("dataset-info", describeError(e), true);
  }
}

void boot();

/** UI state: channel pair, slice position, active segmentation,
 * visibility toggles, selection and query parameter controls.
 *
 * The one structural rule: toggle and selection state may only ever
 * reference segments present in the active report. Installing a new
 * report prunes everything that no longer applies; toggling a segment
 * that is not in the report raises StaleSegmentation, which the UI
 * renders as a "re-run the query" prompt.
 */

import type { QueryMethod, QuerySpecDoc, SegmentRow } from "./types.js";

export class StaleSegmentation extends Error {
  constructor(message: string) {
    super(message);
    this.name = "StaleSegmentation";
  }
}

export interface QueryControls {
  method: QueryMethod;
  metric: string;
  threshold: number;
  cutLevel: number;
  delta: number;
}

export class ViewState {
  channelX = "";
  channelY = "";
  sliceAxis: "x" | "y" | "z" = "z";
  sliceIndex = 0;
  semantics: "csg" | "paper_literal" = "csg";
  controls: QueryControls = {
    method: "crown",
    metric: "persistence",
    threshold: 0,
    cutLevel: 0,
    delta: 0,
  };

  private segmentationId: string | null = null;
  private rows: SegmentRow[] = [];
  private hidden = new Set<number>();
  private selected: number | null = null;

  get activeSegmentation(): string | null {
    return this.segmentationId;
  }

  get report(): SegmentRow[] {
    return this.rows.slice();
  }

  get selectedSegment(): number | null {
    return this.selected;
  }

  /** The spec document the current controls describe. */
  querySpec(): QuerySpecDoc {
    const c = this.controls;
    switch (c.method) {
      case "branch_decomposition":
      case "leaf_arcs":
        return { method: c.method, metric: c.metric, threshold: c.threshold };
      case "subtrees":
        return { method: c.method, cut_level: c.cutLevel };
      case "crown":
        return { method: c.method, delta: c.delta };
    }
  }

  /** Install a new report; stale toggles and selection are pruned. */
  setReport(id: string, rows: SegmentRow[]): void {
    const present = new Set(rows.map((r) => r.id));
    this.segmentationId = id;
    this.rows = rows.slice();
    this.hidden = new Set([...this.hidden].filter((s) => present.has(s)));
    if (this.selected !== null && !present.has(this.selected)) {
      this.selected = null;
    }
  }

  clearReport(): void {
    this.segmentationId = null;
    this.rows = [];
    this.hidden.clear();
    this.selected = null;
  }

  private requireSegment(id: number): void {
    if (!this.rows.some((r) => r.id === id)) {
      throw new StaleSegmentation(
        `segment ${id} is not in the active segmentation; re-run the query`,
      );
    }
  }

  isVisible(id: number): boolean {
    return !this.hidden.has(id);
  }

  toggle(id: number): boolean {
    this.requireSegment(id);
    if (this.hidden.has(id)) this.hidden.delete(id);
    else this.hidden.add(id);
    return this.isVisible(id);
  }

  setAllVisible(visible: boolean): void {
    this.hidden = visible ? new Set() : new Set(this.rows.map((r) => r.id));
  }

  visibleIds(): number[] {
    return this.rows.map((r) => r.id).filter((id) => !this.hidden.has(id));
  }

  select(id: number | null): void {
    if (id !== null) this.requireSegment(id);
    this.selected = id;
  }

  /** A click on the slice: background leaves the selection unchanged. */
  clickLabel(label: number): { changed: boolean; status: string } {
    if (label < 0) {
      return { changed: false, status: "background: nothing selected" };
    }
    this.requireSegment(label);
    this.selected = label;
    return { changed: true, status: `selected segment ${label}` };
  }

  /** Changing the slice keeps the selection (it spans slices). */
  setSlice(axis: "x" | "y" | "z", index: number): void {
    this.sliceAxis = axis;
    this.sliceIndex = index;
  }
}

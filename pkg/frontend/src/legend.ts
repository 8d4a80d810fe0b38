/** Legend model: one entry per segment in the active report.
 *
 * Every number on a button is copied straight from the report the
 * service returned; the label is the value at the segment's minimum.
 * Colors come from the same id-keyed palette the slice overlay uses.
 */

import { segmentColor } from "./colors.js";
import type { SegmentRow } from "./types.js";
import type { ViewState } from "./viewState.js";

export interface LegendEntry {
  id: number;
  /** Value of the segment's minimum, formatted for the button. */
  label: string;
  minValue: number;
  color: string;
  visible: boolean;
  selected: boolean;
  vertexCount: number;
  group: number;
}

/** Compact display formatting (display only, never sent back). */
export function formatValue(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(3);
  return String(Number(v.toPrecision(5)));
}

export function buildLegend(rows: SegmentRow[], view: ViewState): LegendEntry[] {
  return rows.map((r) => ({
    id: r.id,
    label: formatValue(r.min_value),
    minValue: r.min_value,
    color: segmentColor(r.id),
    visible: view.isVisible(r.id),
    selected: view.selectedSegment === r.id,
    vertexCount: r.vertex_count,
    group: r.group,
  }));
}

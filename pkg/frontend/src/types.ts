/** Wire types for the timt HTTP service. Field names mirror the JSON. */

export interface GridDict {
  dims: [number, number, number];
  spacing: [number, number, number];
  connectivity: string;
}

export interface ChannelStats {
  min: number;
  max: number;
  mean: number;
  std: number;
}

export interface ChannelInfo {
  name: string;
  unit: string;
  provenance: string;
  dtype: string;
  stats: ChannelStats;
}

export interface DatasetInfo {
  grid: GridDict;
  channels: ChannelInfo[];
  semantics: string;
  scatter: string;
}

export interface ScatterData {
  x: string;
  y: string;
  bins: number;
  sampling: string;
  dtype: string;
  order: string;
  counts: number[][];
  x_edges: number[];
  y_edges: number[];
}

/** One endpoint of a box interval; null encodes an unbounded side. */
export type Bound = number | null;

export interface PointDoc {
  kind: "point";
  channels: string[];
  coords: number[];
}

export interface SegmentTraitDoc {
  kind: "segment";
  channels: string[];
  start: number[];
  end: number[];
}

export interface BoxDoc {
  kind: "box";
  channels: string[];
  intervals: [Bound, Bound][];
}

export interface PolygonDoc {
  kind: "polygon";
  channels: [string, string];
  vertices: [number, number][];
}

export type PrimitiveDoc = PointDoc | SegmentTraitDoc | BoxDoc | PolygonDoc;

export interface NotDoc {
  op: "not";
  child: TraitDoc;
}

export interface GroupDoc {
  op: "and" | "or" | "product_l2";
  children: TraitDoc[];
}

export type TraitDoc = PrimitiveDoc | NotDoc | GroupDoc;

export type QueryMethod =
  | "branch_decomposition"
  | "leaf_arcs"
  | "subtrees"
  | "crown";

export interface QuerySpecDoc {
  method: QueryMethod;
  metric?: string;
  threshold?: number;
  cut_level?: number;
  delta?: number;
}

export interface QueryResult {
  id: string;
  n_segments: number;
  cached: boolean;
  job: string;
  report: string;
}

export interface SegmentRow {
  id: number;
  min_vertex: number;
  min_value: number;
  vertex_count: number;
  metric_value: number;
  group: number;
}

export interface SegmentsResponse {
  id: string;
  spec: QuerySpecDoc;
  info: Record<string, unknown>;
  n_segments: number;
  segments: SegmentRow[];
}

/** 2D plane cut from a flat vertex array; values are row-major. */
export interface SlicePayload {
  axis: "x" | "y" | "z";
  index: number;
  shape: [number, number];
  dtype: string;
  order: string;
  values: number[];
  background?: number;
  id?: string;
  trait?: string;
  field_id?: string;
}

export interface TreeNodeDoc {
  id: number;
  vertex: number;
  value: number;
  kind: string;
}

export interface TreeArcDoc {
  id: number;
  lower: number;
  upper: number;
  n_members: number;
}

export interface TreePairDoc {
  min_node: number;
  death_node: number;
  persistence: number;
  essential: boolean;
}

export interface TreeDoc {
  grid: GridDict;
  direction: string;
  tie_rule: string;
  root: number;
  nodes: TreeNodeDoc[];
  arcs: TreeArcDoc[];
  pairs: TreePairDoc[];
  trait: string;
  field_id: string;
}

export interface Suggestion {
  atom: number;
  usage: number;
  trait: TraitDoc;
}

export interface SuggestionsResponse {
  id: string;
  scaling: string;
  channels: string[];
  k: number;
  t0: number;
  rmse: number;
  suggestions: Suggestion[];
}

export interface JobInfo {
  id: string;
  kind: string;
  status: string;
}

export interface ApiErrorItem {
  path: string;
  message: string;
}

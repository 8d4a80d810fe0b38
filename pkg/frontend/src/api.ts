/** Thin typed client for the timt HTTP service.
 *
 * Every displayed number comes from these calls; the UI never recomputes
 * distances, minima or labels on its own. All requests accept an
 * AbortSignal so a superseded view can cancel what it no longer needs.
 */

import type {
  ApiErrorItem,
  DatasetInfo,
  JobInfo,
  QueryResult,
  QuerySpecDoc,
  ScatterData,
  SegmentsResponse,
  SlicePayload,
  SuggestionsResponse,
  TraitDoc,
  TreeDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly errors: ApiErrorItem[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface PutTraitResponse {
  name: string;
  stored: boolean;
  field: string;
  bytes: number;
}

export interface TreeQuery {
  simplify_threshold?: number;
  metric?: string;
}

export interface SuggestionQuery {
  channels?: string[];
  scaling?: string;
  k?: number;
  t0?: number;
  iterations?: number;
  top?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let message = `HTTP ${resp.status}`;
      let errors: ApiErrorItem[] = [];
      try {
        const body = (await resp.json()) as {
          detail?: unknown;
          errors?: unknown;
        };
        if (typeof body.detail === "string") message = body.detail;
        if (Array.isArray(body.errors)) errors = body.errors as ApiErrorItem[];
      } catch {
        // non-JSON error body; keep the status line message
      }
      throw new ApiError(resp.status, message, errors);
    }
    return resp;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.request(path, init);
    return (await resp.json()) as T;
  }

  dataset(signal?: AbortSignal): Promise<DatasetInfo> {
    return this.json("/dataset", { signal });
  }

  scatter(
    x: string,
    y: string,
    bins = 128,
    signal?: AbortSignal,
  ): Promise<ScatterData> {
    const q = new URLSearchParams({ x, y, bins: String(bins) });
    return this.json(`/dataset/scatter?${q}`, { signal });
  }

  putTrait(
    name: string,
    doc: TraitDoc,
    signal?: AbortSignal,
  ): Promise<PutTraitResponse> {
    return this.json(`/traits/${encodeURIComponent(name)}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
      signal,
    });
  }

  listTraits(signal?: AbortSignal): Promise<{ traits: string[] }> {
    return this.json("/traits", { signal });
  }

  /** Raw canonical bytes of a stored trait document. */
  async traitText(name: string, signal?: AbortSignal): Promise<string> {
    const resp = await this.request(`/traits/${encodeURIComponent(name)}`, {
      signal,
    });
    return resp.text();
  }

  query(
    trait: string,
    spec: QuerySpecDoc,
    signal?: AbortSignal,
  ): Promise<QueryResult> {
    return this.json("/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ trait, spec }),
      signal,
    });
  }

  segments(id: string, signal?: AbortSignal): Promise<SegmentsResponse> {
    return this.json(`/segments/${encodeURIComponent(id)}`, { signal });
  }

  segmentsSlice(
    id: string,
    axis: string,
    index: number,
    signal?: AbortSignal,
  ): Promise<SlicePayload> {
    const q = new URLSearchParams({ axis, index: String(index) });
    return this.json(`/segments/${encodeURIComponent(id)}/slice?${q}`, {
      signal,
    });
  }

  fieldSlice(
    name: string,
    axis: string,
    index: number,
    signal?: AbortSignal,
  ): Promise<SlicePayload> {
    const q = new URLSearchParams({ axis, index: String(index) });
    return this.json(`/fields/${encodeURIComponent(name)}/slice?${q}`, {
      signal,
    });
  }

  tree(name: string, opts: TreeQuery = {}, signal?: AbortSignal): Promise<TreeDoc> {
    const q = new URLSearchParams();
    if (opts.simplify_threshold !== undefined) {
      q.set("simplify_threshold", String(opts.simplify_threshold));
    }
    if (opts.metric !== undefined) q.set("metric", opts.metric);
    const qs = q.toString();
    return this.json(`/tree/${encodeURIComponent(name)}${qs ? "?" + qs : ""}`, {
      signal,
    });
  }

  suggestions(
    opts: SuggestionQuery = {},
    signal?: AbortSignal,
  ): Promise<SuggestionsResponse> {
    const q = new URLSearchParams();
    if (opts.channels) q.set("channels", opts.channels.join(","));
    if (opts.scaling !== undefined) q.set("scaling", opts.scaling);
    if (opts.k !== undefined) q.set("k", String(opts.k));
    if (opts.t0 !== undefined) q.set("t0", String(opts.t0));
    if (opts.iterations !== undefined) {
      q.set("iterations", String(opts.iterations));
    }
    if (opts.top !== undefined) q.set("top", String(opts.top));
    const qs = q.toString();
    return this.json(`/dictionary/suggestions${qs ? "?" + qs : ""}`, {
      signal,
    });
  }

  job(key: string, signal?: AbortSignal): Promise<JobInfo> {
    return this.json(`/jobs/${encodeURIComponent(key)}`, { signal });
  }
}

/** Sequence tags for discarding responses that a newer request superseded. */
export class RequestGate {
  private issued = 0;
  private applied = 0;

  issue(): number {
    return ++this.issued;
  }

  /** True when the response for `tag` is still the newest one applied. */
  accept(tag: number): boolean {
    if (tag < this.applied) return false;
    this.applied = tag;
    return true;
  }
}

/**
 * Typed client for the search service. At most one search request is in
 * flight: issuing a new one aborts the previous.
 */

export type SearchMode = "stnet" | "text_only" | "sketch_only" | "two_stage";

export interface SearchResult {
  image_id: string;
  score: number;
  rank: number;
  thumbnail_url: string;
}

export interface SearchResponse {
  results: SearchResult[];
  clamped: boolean;
  mode: SearchMode;
  latency_ms: number;
}

export interface SearchParams {
  text?: string;
  sketchPng?: string;
  k: number;
  mode: SearchMode;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(private baseUrl: string = "",
              private fetchFn: FetchLike = fetch) {}

  /** Request body for a search; sketch/text fields only when provided. */
  buildSearchBody(params: SearchParams): Record<string, unknown> {
    const body: Record<string, unknown> = { k: params.k, mode: params.mode };
    if (params.text !== undefined && params.text !== "") body.text = params.text;
    if (params.sketchPng !== undefined) body.sketch_png = params.sketchPng;
    return body;
  }

  async search(params: SearchParams): Promise<SearchResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const resp = await this.fetchFn(`${this.baseUrl}/api/search`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(this.buildSearchBody(params)),
      signal: controller.signal,
    });
    if (this.inflight === controller) this.inflight = null;
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body = await resp.json();
        if (body.detail) detail = String(body.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as SearchResponse;
  }

  async health(): Promise<{ status: string; index_size: number }> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/health`);
    if (!resp.ok) throw new ApiError(resp.status, "health check failed");
    return resp.json();
  }

  async categories(): Promise<string[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/categories`);
    if (!resp.ok) throw new ApiError(resp.status, "categories unavailable");
    return (await resp.json()).categories;
  }
}

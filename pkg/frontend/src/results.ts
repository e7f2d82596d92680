/**
 * Results state: the current ranked grid plus the previous one, kept
 * side by side for one refinement step. Order is exactly the server's;
 * no client-side re-ranking.
 */
import { SearchResponse, SearchResult } from "./api.js";

export interface ResultsView {
  current: SearchResult[] | null;
  previous: SearchResult[] | null;
  clamped: boolean;
  latencyMs: number;
}

export class ResultsHistory {
  private view: ResultsView = {
    current: null, previous: null, clamped: false, latencyMs: 0,
  };

  record(response: SearchResponse): ResultsView {
    this.view = {
      previous: this.view.current,
      current: response.results.slice(),
      clamped: response.clamped,
      latencyMs: response.latency_ms,
    };
    return this.snapshot();
  }

  snapshot(): ResultsView {
    return {
      current: this.view.current ? this.view.current.slice() : null,
      previous: this.view.previous ? this.view.previous.slice() : null,
      clamped: this.view.clamped,
      latencyMs: this.view.latencyMs,
    };
  }

  reset(): void {
    this.view = { current: null, previous: null, clamped: false, latencyMs: 0 };
  }
}

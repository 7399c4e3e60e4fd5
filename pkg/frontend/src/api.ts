// Thin client over the scoring API. fetch is injectable so tests can run
// against an in-process stub server or intercept traffic.

import type {
  Action,
  HeatmapRow,
  HistoryPayload,
  ScoreCard,
  ScorecardPayload,
  WhatIfPayload,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly path?: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, route: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...init.headers, "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + route, init);
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const message =
        payload && typeof payload.error === "string" ? payload.error : response.statusText;
      throw new ApiError(response.status, message, payload?.path);
    }
    return payload as T;
  }

  fleetScores(): Promise<ScoreCard[]> {
    return this.request("GET", "/v1/fleet/scores");
  }

  regionHeatmap(region: string): Promise<HeatmapRow> {
    return this.request("GET", `/v1/regions/${encodeURIComponent(region)}/heatmap`);
  }

  dcScorecard(dc: string): Promise<ScorecardPayload> {
    return this.request("GET", `/v1/datacenters/${encodeURIComponent(dc)}/scorecard`);
  }

  dcHistory(dc: string, window: number): Promise<HistoryPayload> {
    return this.request("GET", `/v1/datacenters/${encodeURIComponent(dc)}/history?window=${window}`);
  }

  evaluateWhatIf(actions: Action[]): Promise<WhatIfPayload> {
    return this.request("POST", "/v1/whatif", actions);
  }

  advanceTick(): Promise<{ at: string }> {
    return this.request("POST", "/v1/sim/tick");
  }
}

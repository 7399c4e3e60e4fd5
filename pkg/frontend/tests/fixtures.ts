// Fixed API payloads used by the render and integration tests.

import type {
  HeatmapRow,
  HistoryPayload,
  ScoreCard,
  ScorecardPayload,
  WhatIfPayload,
} from "../src/types.js";

export const TICK = "2025-01-05T00:00:00Z";

export function card(partial: Partial<ScoreCard> & { scope_id: string }): ScoreCard {
  return {
    scope: "datacenter",
    es: 0.25,
    p_fail: 0.2,
    raw: 0.2,
    persisted: 0.2,
    color: "green",
    at: TICK,
    ...partial,
  };
}

// deliberately unsorted: the console must order tiles worst-first
export const HEATMAP: HeatmapRow = {
  region: "region-a",
  cells: [
    { dc: "dc2", persisted: 0.1, color: "green" },
    { dc: "dc1", persisted: 0.9, color: "red" },
    { dc: "dc3", persisted: 0.4, color: "amber" },
  ],
};

export const SCORECARD: ScorecardPayload = {
  datacenter: card({ scope_id: "region-a/dc1", persisted: 0.9, raw: 0.9, p_fail: 0.9, color: "red" }),
  layers: [
    card({
      scope: "layer", scope_id: "region-a/dc1/agg",
      es: 0.125, p_fail: 0.9, raw: 0.9, persisted: 0.9, color: "red",
    }),
    card({
      scope: "layer", scope_id: "region-a/dc1/spine",
      es: 0.5, p_fail: 0.05, raw: 0.05, persisted: 0.05, color: "green",
    }),
  ],
};

// series [0.2, 0.3, 0.25]: ceiling = max = 0.3, movement = last - first = 0.05
export const HISTORY: HistoryPayload = {
  scope_id: "region-a/dc1",
  points: [
    { at: "2025-01-03T00:00:00Z", persisted: 0.2, color: "green" },
    { at: "2025-01-04T00:00:00Z", persisted: 0.3, color: "amber" },
    { at: TICK, persisted: 0.25, color: "green" },
  ],
  ceiling: 0.3,
  movement: 0.05,
};

// a staged repair: after.raw <= before.raw on every scope
export const WHATIF: WhatIfPayload = {
  before: [
    card({ scope: "layer", scope_id: "region-a/dc1/agg", raw: 0.9, persisted: 0.9, color: "red" }),
    card({ scope_id: "region-a/dc1", raw: 0.9, persisted: 0.9, color: "red" }),
    card({ scope: "region", scope_id: "region-a", raw: 0.9, persisted: 0.9, color: "red" }),
  ],
  after: [
    card({ scope: "layer", scope_id: "region-a/dc1/agg", raw: 0.3, persisted: 0.3, color: "amber" }),
    card({ scope_id: "region-a/dc1", raw: 0.3, persisted: 0.3, color: "amber" }),
    card({ scope: "region", scope_id: "region-a", raw: 0.3, persisted: 0.3, color: "amber" }),
  ],
  safe_to_remove: null,
};

export const FLEET_SCORES: ScoreCard[] = [
  SCORECARD.datacenter,
  ...SCORECARD.layers,
  card({ scope: "region", scope_id: "region-a", persisted: 0.9, raw: 0.9, color: "red" }),
  card({ scope_id: "region-a/dc2", persisted: 0.1, raw: 0.1, color: "green" }),
  card({ scope: "layer", scope_id: "region-a/dc2/agg", persisted: 0.1, raw: 0.1, color: "green" }),
];

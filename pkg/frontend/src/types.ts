// Shapes of the scoring API payloads. The console renders these verbatim:
// every number on screen comes from a response field, never local math.

export type Color = "green" | "amber" | "orange" | "red";
export type Scope = "layer" | "datacenter" | "region";

export interface ScoreCard {
  scope: Scope;
  scope_id: string;
  es: number | null; // null encodes "no demand" (+infinity margin)
  p_fail: number;
  raw: number;
  persisted: number;
  color: Color;
  at: string;
}

export interface HeatmapCell {
  dc: string;
  persisted: number;
  color: Color;
}

export interface HeatmapRow {
  region: string;
  cells: HeatmapCell[];
}

export interface SeriesPoint {
  at: string;
  persisted: number;
  color: Color;
}

export interface HistoryPayload {
  scope_id: string;
  points: SeriesPoint[];
  ceiling: number | null;
  movement: number | null;
}

export interface ScorecardPayload {
  datacenter: ScoreCard;
  layers: ScoreCard[];
}

export type ActionKind =
  | "repair_element"
  | "drain_element"
  | "undrain_element"
  | "add_capacity"
  | "replace_element";

export interface Action {
  kind: ActionKind;
  element_id?: string;
  layer_id?: string;
  amount?: number;
}

export interface WhatIfPayload {
  before: ScoreCard[];
  after: ScoreCard[];
  safe_to_remove: boolean | null;
}

export const COLOR_SEVERITY: Record<Color, number> = {
  green: 0,
  amber: 1,
  orange: 2,
  red: 3,
};

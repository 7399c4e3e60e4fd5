// Client view state and its pure transitions. The invariants that matter:
// staged actions may only reference elements of the loaded snapshot, what-if
// results are discarded when the underlying tick changes, and re-evaluating
// unchanged staged actions must produce a byte-identical request body.

import type { Action, ScoreCard, WhatIfPayload } from "./types.js";

export interface ViewState {
  selectedRegion: string | null;
  selectedDc: string | null;
  staged: Action[];
  stagingError: string | null;
  whatif: WhatIfPayload | null;
  whatifTick: string | null;
  whatifStale: boolean;
  snapshotTick: string | null;
  lastGoodAt: string | null;
  apiStale: boolean;
  pollIntervalMs: number;
  knownLayerRefs: Set<string>; // "dc_id/layer_id"
  evaluating: boolean;
}

export function initialState(pollIntervalMs = 5000): ViewState {
  return {
    selectedRegion: null,
    selectedDc: null,
    staged: [],
    stagingError: null,
    whatif: null,
    whatifTick: null,
    whatifStale: false,
    snapshotTick: null,
    lastGoodAt: null,
    apiStale: false,
    pollIntervalMs,
    knownLayerRefs: new Set(),
    evaluating: false,
  };
}

/** Layer references ("dc_id/layer_id") present in a scorecard snapshot. */
export function layerRefsFromCards(cards: ScoreCard[]): Set<string> {
  const refs = new Set<string>();
  for (const card of cards) {
    if (card.scope !== "layer") continue;
    const parts = card.scope_id.split("/"); // region/dc/layer
    if (parts.length === 3) refs.add(`${parts[1]}/${parts[2]}`);
  }
  return refs;
}

function layerRefOf(action: Action): string | null {
  if (action.kind === "add_capacity") {
    return action.layer_id ?? null;
  }
  const id = action.element_id ?? "";
  const parts = id.split("/"); // dc/layer/element
  return parts.length === 3 ? `${parts[0]}/${parts[1]}` : null;
}

/** Validate and append an action; rejects targets outside the snapshot. */
export function stageAction(state: ViewState, action: Action): ViewState {
  const ref = layerRefOf(action);
  if (ref === null || !state.knownLayerRefs.has(ref)) {
    return {
      ...state,
      stagingError: `target ${ref ?? "(malformed)"} is not part of the loaded snapshot`,
    };
  }
  return { ...state, staged: [...state.staged, action], stagingError: null };
}

export function removeStaged(state: ViewState, index: number): ViewState {
  const staged = state.staged.filter((_, i) => i !== index);
  return { ...state, staged, stagingError: null };
}

export function moveStaged(state: ViewState, index: number, delta: -1 | 1): ViewState {
  const target = index + delta;
  if (target < 0 || target >= state.staged.length) return state;
  const staged = [...state.staged];
  const tmp = staged[index]!;
  staged[index] = staged[target]!;
  staged[target] = tmp;
  return { ...state, staged };
}

/** Canonical request body; identical staged actions yield identical bytes. */
export function whatifRequestBody(staged: Action[]): string {
  return JSON.stringify(
    staged.map((action) => {
      const doc: Record<string, unknown> = { kind: action.kind };
      if (action.element_id !== undefined) doc.element_id = action.element_id;
      if (action.layer_id !== undefined) doc.layer_id = action.layer_id;
      if (action.amount !== undefined) doc.amount = action.amount;
      return doc;
    }),
  );
}

/** Fold a fresh snapshot in; a tick change invalidates any open what-if. */
export function observeSnapshot(state: ViewState, cards: ScoreCard[], fetchedAt: string): ViewState {
  const tick = cards.length > 0 ? cards[0]!.at : state.snapshotTick;
  const tickChanged = state.snapshotTick !== null && tick !== state.snapshotTick;
  return {
    ...state,
    snapshotTick: tick,
    knownLayerRefs: layerRefsFromCards(cards),
    lastGoodAt: fetchedAt,
    apiStale: false,
    whatif: tickChanged ? null : state.whatif,
    whatifStale: tickChanged && state.whatif !== null,
  };
}

export function observeApiFailure(state: ViewState): ViewState {
  return { ...state, apiStale: true };
}

export function recordWhatIf(state: ViewState, result: WhatIfPayload): ViewState {
  return {
    ...state,
    whatif: result,
    whatifTick: state.snapshotTick,
    whatifStale: false,
    evaluating: false,
  };
}

/** Polling pauses while a what-if comparison is open or in flight. */
export function pollingPaused(state: ViewState): boolean {
  return state.evaluating || state.whatif !== null;
}

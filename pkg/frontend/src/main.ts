// DOM glue: polling, event delegation, and composition of the pure views.
// All rendering/state logic lives in render.ts / state.ts where it is tested.

import { ApiClient, ApiError } from "./api.js";
import {
  escapeHtml,
  renderDrilldown,
  renderHeatmap,
  renderStagedActions,
  renderStaleBanner,
  renderUnknownDc,
  renderWhatIfResult,
} from "./render.js";
import {
  initialState,
  moveStaged,
  observeApiFailure,
  observeSnapshot,
  pollingPaused,
  recordWhatIf,
  removeStaged,
  stageAction,
  whatifRequestBody,
  type ViewState,
} from "./state.js";
import type { Action, ActionKind, ScoreCard } from "./types.js";

const app = document.getElementById("app")!;
const DEFAULT_BASE = "http://127.0.0.1:8080";

let state: ViewState = initialState();
let client = new ApiClient(localStorage.getItem("ansc.baseUrl") ?? DEFAULT_BASE);
let cards: ScoreCard[] = [];
let lastBody: string | null = null;

function regions(): string[] {
  return [...new Set(cards.filter((c) => c.scope === "region").map((c) => c.scope_id))].sort();
}

async function refresh(): Promise<void> {
  try {
    const fetched = await client.fleetScores();
    cards = fetched;
    state = observeSnapshot(state, fetched, new Date().toISOString());
    if (state.selectedRegion === null && regions().length > 0) {
      state = { ...state, selectedRegion: regions()[0]! };
    }
  } catch {
    state = observeApiFailure(state);
  }
  await render();
}

async function render(): Promise<void> {
  const parts: string[] = [];
  if (state.apiStale) parts.push(renderStaleBanner(state.lastGoodAt));

  const regionOptions = regions()
    .map(
      (r) =>
        `<option value="${escapeHtml(r)}" ${r === state.selectedRegion ? "selected" : ""}>${escapeHtml(r)}</option>`,
    )
    .join("");
  parts.push(`
    <nav>
      <label>region <select data-action="pick-region">${regionOptions}</select></label>
      <button data-action="tick">advance tick</button>
      <label>API <input data-action="base-url" value="${escapeHtml(client["baseUrl" as never] ?? DEFAULT_BASE)}" size="28"></label>
    </nav>`);

  if (state.selectedRegion) {
    try {
      const row = await client.regionHeatmap(state.selectedRegion);
      parts.push(renderHeatmap(row));
    } catch {
      parts.push(renderStaleBanner(state.lastGoodAt));
    }
  }

  if (state.selectedDc) {
    try {
      const [scorecard, history] = await Promise.all([
        client.dcScorecard(state.selectedDc),
        client.dcHistory(state.selectedDc, 30),
      ]);
      parts.push(renderDrilldown(scorecard, history));
    } catch (error) {
      parts.push(
        error instanceof ApiError && error.status === 404
          ? renderUnknownDc(state.selectedDc)
          : renderStaleBanner(state.lastGoodAt),
      );
    }
    parts.push(`
      <form class="stage-form" data-action="stage-form">
        <select name="kind">
          <option>repair_element</option><option>drain_element</option>
          <option>undrain_element</option><option>replace_element</option>
          <option>add_capacity</option>
        </select>
        <input name="target" placeholder="element id or dc/layer" size="30">
        <input name="amount" type="number" placeholder="units" size="6">
        <button type="submit">stage</button>
      </form>`);
    parts.push(renderStagedActions(state.staged, state.stagingError));
    if (state.whatifStale) {
      parts.push(renderWhatIfResult({ before: [], after: [], safe_to_remove: null }, true));
    } else if (state.whatif) {
      parts.push(renderWhatIfResult(state.whatif, false));
    }
  }

  app.innerHTML = parts.join("\n");
}

async function evaluateStaged(): Promise<void> {
  if (state.staged.length === 0 || state.evaluating) return;
  state = { ...state, evaluating: true };
  const body = whatifRequestBody(state.staged);
  lastBody = body;
  try {
    const result = await client.evaluateWhatIf(JSON.parse(body) as Action[]);
    state = recordWhatIf(state, result);
  } catch (error) {
    state = {
      ...state,
      evaluating: false,
      stagingError: error instanceof ApiError ? error.message : "evaluation failed",
    };
  }
  await render();
}

app.addEventListener("click", async (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) return;
  const action = target.dataset.action;
  const index = Number(target.dataset.index ?? -1);
  if (action === "drilldown") {
    state = { ...state, selectedDc: target.dataset.dc ?? null };
  } else if (action === "stage-remove") {
    state = removeStaged(state, index);
  } else if (action === "stage-up") {
    state = moveStaged(state, index, -1);
  } else if (action === "stage-down") {
    state = moveStaged(state, index, 1);
  } else if (action === "evaluate" || action === "re-evaluate") {
    await evaluateStaged();
    return;
  } else if (action === "tick") {
    try {
      await client.advanceTick();
      await refresh();
    } catch {
      state = observeApiFailure(state);
    }
  } else {
    return;
  }
  await render();
});

app.addEventListener("change", async (event) => {
  const target = event.target as HTMLElement;
  if (target.dataset.action === "pick-region") {
    state = { ...state, selectedRegion: (target as HTMLSelectElement).value, selectedDc: null };
    await render();
  } else if (target.dataset.action === "base-url") {
    const url = (target as HTMLInputElement).value.replace(/\/$/, "");
    localStorage.setItem("ansc.baseUrl", url);
    client = new ApiClient(url);
    await refresh();
  }
});

app.addEventListener("submit", async (event) => {
  const form = (event.target as HTMLElement).closest<HTMLFormElement>("[data-action=stage-form]");
  if (!form) return;
  event.preventDefault();
  const data = new FormData(form);
  const kind = String(data.get("kind")) as ActionKind;
  const target = String(data.get("target") ?? "").trim();
  const action: Action =
    kind === "add_capacity"
      ? { kind, layer_id: target, amount: Number(data.get("amount") ?? 0) }
      : { kind, element_id: target };
  state = stageAction(state, action);
  await render();
});

setInterval(() => {
  if (!pollingPaused(state)) void refresh();
}, state.pollIntervalMs);

void refresh();

export { lastBody }; // exposed for debugging idempotence in the console

// Pure view builders: API payloads in, HTML strings out.
//
// Every data value lands in a `data-field="..."` span so tests (and the
// passthrough audit) can map each on-screen value back to the exact API
// response field it came from. No score arithmetic happens here; sorting
// and coordinate scaling are presentation only.

import {
  COLOR_SEVERITY,
  type Action,
  type HeatmapRow,
  type HistoryPayload,
  type ScoreCard,
  type ScorecardPayload,
  type WhatIfPayload,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fmtScore(value: number | null): string {
  if (value === null) return "∞";
  return value.toFixed(4);
}

function field(name: string, value: string, cls = ""): string {
  const className = cls ? ` class="${cls}"` : "";
  return `<span data-field="${escapeHtml(name)}"${className}>${escapeHtml(value)}</span>`;
}

function colorBadge(fieldName: string, color: string): string {
  // fixed palette with a text label for accessibility
  return `<span class="badge badge-${escapeHtml(color)}">${field(fieldName, color)}</span>`;
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

export function heatmapTileOrder(row: HeatmapRow): HeatmapRow["cells"] {
  // worst first: color severity, then persisted score, then id
  return [...row.cells].sort((a, b) => {
    const severity = COLOR_SEVERITY[b.color] - COLOR_SEVERITY[a.color];
    if (severity !== 0) return severity;
    if (b.persisted !== a.persisted) return b.persisted - a.persisted;
    return a.dc < b.dc ? -1 : a.dc > b.dc ? 1 : 0;
  });
}

export function renderHeatmap(row: HeatmapRow): string {
  const cells = heatmapTileOrder(row);
  if (cells.length === 0) {
    return `<p class="empty">No datacenters in ${escapeHtml(row.region)}.</p>`;
  }
  const tiles = cells
    .map(
      (cell) => `
      <button class="tile tile-${cell.color}" data-action="drilldown" data-dc="${escapeHtml(cell.dc)}">
        <span class="tile-id">${escapeHtml(cell.dc)}</span>
        ${field(`heatmap.${cell.dc}.persisted`, fmtScore(cell.persisted), "tile-score")}
        ${colorBadge(`heatmap.${cell.dc}.color`, cell.color)}
      </button>`,
    )
    .join("\n");
  return `<div class="heatmap" data-region="${escapeHtml(row.region)}">${tiles}</div>`;
}

export function renderStaleBanner(lastGoodAt: string | null): string {
  const when = lastGoodAt ? escapeHtml(lastGoodAt) : "never";
  return `<div class="banner banner-stale" role="alert">API unreachable; showing last good data from ${field("banner.last_good", when)}</div>`;
}

// ---------------------------------------------------------------------------
// drill-down
// ---------------------------------------------------------------------------

function layerRow(card: ScoreCard): string {
  const id = card.scope_id;
  const name = id.split("/").pop() ?? id;
  return `<tr>
    <td>${escapeHtml(name)}</td>
    <td>${field(`layer.${id}.es`, fmtScore(card.es))}</td>
    <td>${field(`layer.${id}.p_fail`, fmtScore(card.p_fail))}</td>
    <td>${field(`layer.${id}.raw`, fmtScore(card.raw))}</td>
    <td>${field(`layer.${id}.persisted`, fmtScore(card.persisted))}</td>
    <td>${colorBadge(`layer.${id}.color`, card.color)}</td>
  </tr>`;
}

export function movementIndicator(movement: number | null): string {
  if (movement === null) return "–";
  if (movement > 0) return "▲ worsening";
  if (movement < 0) return "▼ improving";
  return "→ flat";
}

export function renderChart(history: HistoryPayload): string {
  const points = history.points;
  if (points.length === 0) {
    return `<p class="empty">No history yet.</p>`;
  }
  const width = 320;
  const height = 96;
  const pad = 8;
  const x = (i: number) =>
    points.length === 1 ? width / 2 : pad + (i * (width - 2 * pad)) / (points.length - 1);
  const y = (persisted: number) => height - pad - persisted * (height - 2 * pad);
  const polyline = points.map((p, i) => `${x(i).toFixed(1)},${y(p.persisted).toFixed(1)}`).join(" ");
  const ceiling = history.ceiling;
  const ceilingLine =
    ceiling === null
      ? ""
      : `<line class="ceiling" x1="0" x2="${width}" y1="${y(ceiling).toFixed(1)}" y2="${y(ceiling).toFixed(1)}" />`;
  return `
  <figure class="chart">
    <svg viewBox="0 0 ${width} ${height}" role="img" aria-label="persisted score trend">
      ${ceilingLine}
      <polyline class="trend" points="${polyline}" fill="none" />
    </svg>
    <figcaption>
      ceiling ${field("history.ceiling", ceiling === null ? "–" : fmtScore(ceiling))},
      movement ${field("history.movement", history.movement === null ? "–" : fmtScore(history.movement))}
      ${field("history.movement_label", movementIndicator(history.movement), "movement")}
    </figcaption>
  </figure>`;
}

export function renderDrilldown(payload: ScorecardPayload, history: HistoryPayload): string {
  const dcCard = payload.datacenter;
  const rows = payload.layers.map(layerRow).join("\n");
  return `
  <section class="drilldown" data-dc-scope="${escapeHtml(dcCard.scope_id)}">
    <header>
      <h2>${escapeHtml(dcCard.scope_id)}</h2>
      ${colorBadge(`dc.${dcCard.scope_id}.color`, dcCard.color)}
      <span>persisted ${field(`dc.${dcCard.scope_id}.persisted`, fmtScore(dcCard.persisted))}</span>
    </header>
    <table class="layers">
      <thead><tr><th>layer</th><th>ES</th><th>P(fail)</th><th>raw</th><th>persisted</th><th>color</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    ${renderChart(history)}
  </section>`;
}

export function renderUnknownDc(dc: string): string {
  return `<section class="drilldown"><p class="empty">Unknown datacenter ${escapeHtml(dc)}.</p></section>`;
}

// ---------------------------------------------------------------------------
// what-if panel
// ---------------------------------------------------------------------------

export function describeAction(action: Action): string {
  if (action.kind === "add_capacity") {
    return `add_capacity ${action.layer_id} +${action.amount}`;
  }
  return `${action.kind} ${action.element_id}`;
}

export function renderStagedActions(staged: Action[], error: string | null): string {
  const items = staged
    .map(
      (action, i) => `
      <li>
        <code>${escapeHtml(describeAction(action))}</code>
        <button data-action="stage-up" data-index="${i}" ${i === 0 ? "disabled" : ""}>↑</button>
        <button data-action="stage-down" data-index="${i}" ${i === staged.length - 1 ? "disabled" : ""}>↓</button>
        <button data-action="stage-remove" data-index="${i}">remove</button>
      </li>`,
    )
    .join("\n");
  const err = error ? `<p class="inline-error" role="alert">${escapeHtml(error)}</p>` : "";
  const disabled = staged.length === 0 ? "disabled" : "";
  return `
  <div class="staging">
    <ol class="staged">${items}</ol>
    ${err}
    <button data-action="evaluate" ${disabled}>Evaluate</button>
  </div>`;
}

function whatifRow(prefix: "before" | "after", card: ScoreCard): string {
  const id = card.scope_id;
  return `<tr>
    <td>${escapeHtml(card.scope)}</td>
    <td>${escapeHtml(id)}</td>
    <td>${field(`whatif.${prefix}.${id}.raw`, fmtScore(card.raw))}</td>
    <td>${field(`whatif.${prefix}.${id}.persisted`, fmtScore(card.persisted))}</td>
    <td>${colorBadge(`whatif.${prefix}.${id}.color`, card.color)}</td>
  </tr>`;
}

export function renderWhatIfResult(result: WhatIfPayload, staleTick: boolean): string {
  const before = result.before.map((c) => whatifRow("before", c)).join("\n");
  const after = result.after.map((c) => whatifRow("after", c)).join("\n");
  const safe =
    result.safe_to_remove === null
      ? ""
      : `<p>safe to remove: ${field("whatif.safe_to_remove", String(result.safe_to_remove))}</p>`;
  const stale = staleTick
    ? `<div class="banner banner-stale" role="alert">Snapshot advanced; result discarded. <button data-action="re-evaluate">Re-evaluate</button></div>`
    : "";
  const header = "<tr><th>scope</th><th>id</th><th>raw</th><th>persisted</th><th>color</th></tr>";
  return `
  <div class="whatif-result">
    ${stale}
    <div class="compare">
      <table class="before"><caption>before</caption><thead>${header}</thead><tbody>${before}</tbody></table>
      <table class="after"><caption>after</caption><thead>${header}</thead><tbody>${after}</tbody></table>
    </div>
    ${safe}
  </div>`;
}

// ---------------------------------------------------------------------------
// test utility: map every data-field to its rendered text
// ---------------------------------------------------------------------------

export function extractFields(html: string): Map<string, string> {
  const out = new Map<string, string>();
  const pattern = /<span data-field="([^"]+)"[^>]*>([^<]*)<\/span>/g;
  for (const match of html.matchAll(pattern)) {
    out.set(match[1]!, match[2]!);
  }
  return out;
}

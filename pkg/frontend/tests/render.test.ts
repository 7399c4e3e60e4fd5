import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  extractFields,
  fmtScore,
  heatmapTileOrder,
  movementIndicator,
  renderChart,
  renderDrilldown,
  renderHeatmap,
  renderStagedActions,
  renderStaleBanner,
  renderWhatIfResult,
} from "../src/render.js";
import { HEATMAP, HISTORY, SCORECARD, WHATIF } from "./fixtures.js";

describe("heatmap", () => {
  it("orders tiles worst-first: red, amber, green", () => {
    const order = heatmapTileOrder(HEATMAP).map((c) => c.dc);
    expect(order).toEqual(["dc1", "dc3", "dc2"]);
  });

  it("breaks color ties by persisted, then id", () => {
    const order = heatmapTileOrder({
      region: "r",
      cells: [
        { dc: "b", persisted: 0.5, color: "amber" },
        { dc: "a", persisted: 0.5, color: "amber" },
        { dc: "c", persisted: 0.7, color: "amber" },
      ],
    }).map((c) => c.dc);
    expect(order).toEqual(["c", "a", "b"]);
  });

  it("renders one tile per datacenter with score and label", () => {
    const html = renderHeatmap(HEATMAP);
    const fields = extractFields(html);
    expect(fields.get("heatmap.dc1.persisted")).toBe("0.9000");
    expect(fields.get("heatmap.dc1.color")).toBe("red");
    expect((html.match(/data-action="drilldown"/g) ?? []).length).toBe(3);
    expect(html.indexOf("dc1")).toBeLessThan(html.indexOf("dc3"));
  });

  it("shows an empty state for regions without datacenters", () => {
    expect(renderHeatmap({ region: "void", cells: [] })).toContain("No datacenters");
  });

  it("stale banner carries the last good timestamp", () => {
    const html = renderStaleBanner("2025-01-04T00:00:00Z");
    expect(extractFields(html).get("banner.last_good")).toBe("2025-01-04T00:00:00Z");
  });
});

describe("drilldown", () => {
  it("lists every layer with es, p_fail, raw, persisted, color", () => {
    const fields = extractFields(renderDrilldown(SCORECARD, HISTORY));
    expect(fields.get("layer.region-a/dc1/agg.es")).toBe("0.1250");
    expect(fields.get("layer.region-a/dc1/agg.p_fail")).toBe("0.9000");
    expect(fields.get("layer.region-a/dc1/spine.persisted")).toBe("0.0500");
    expect(fields.get("layer.region-a/dc1/spine.color")).toBe("green");
    expect(fields.get("dc.region-a/dc1.persisted")).toBe("0.9000");
  });

  it("renders the served ceiling and movement", () => {
    const fields = extractFields(renderChart(HISTORY));
    expect(fields.get("history.ceiling")).toBe("0.3000");
    expect(fields.get("history.movement")).toBe("0.0500");
    expect(fields.get("history.movement_label")).toBe("▲ worsening");
  });

  it("marks the ceiling line at the served value", () => {
    expect(renderChart(HISTORY)).toContain('class="ceiling"');
  });

  it("movement indicator follows the sign", () => {
    expect(movementIndicator(0.05)).toContain("worsening");
    expect(movementIndicator(-0.01)).toContain("improving");
    expect(movementIndicator(0)).toContain("flat");
    expect(movementIndicator(null)).toBe("–");
  });

  it("renders an infinite margin as a symbol", () => {
    expect(fmtScore(null)).toBe("∞");
  });

  it("handles an empty series", () => {
    expect(renderChart({ scope_id: "x", points: [], ceiling: null, movement: null })).toContain(
      "No history",
    );
  });
});

describe("what-if panel", () => {
  it("renders before and after side by side", () => {
    const fields = extractFields(renderWhatIfResult(WHATIF, false));
    expect(fields.get("whatif.before.region-a/dc1.raw")).toBe("0.9000");
    expect(fields.get("whatif.after.region-a/dc1.raw")).toBe("0.3000");
    expect(fields.get("whatif.before.region-a/dc1.color")).toBe("red");
    expect(fields.get("whatif.after.region-a/dc1.color")).toBe("amber");
  });

  it("repair renders after.raw <= before.raw for every scope", () => {
    const fields = extractFields(renderWhatIfResult(WHATIF, false));
    for (const scopeId of ["region-a/dc1/agg", "region-a/dc1", "region-a"]) {
      const before = Number(fields.get(`whatif.before.${scopeId}.raw`));
      const after = Number(fields.get(`whatif.after.${scopeId}.raw`));
      expect(after).toBeLessThanOrEqual(before);
    }
  });

  it("stale tick shows the discard prompt", () => {
    const html = renderWhatIfResult({ before: [], after: [], safe_to_remove: null }, true);
    expect(html).toContain("result discarded");
    expect(html).toContain('data-action="re-evaluate"');
  });

  it("evaluate button is disabled with no staged actions", () => {
    expect(renderStagedActions([], null)).toContain('data-action="evaluate" disabled');
    const armed = renderStagedActions([{ kind: "repair_element", element_id: "dc1/agg/e0" }], null);
    expect(armed).not.toContain('data-action="evaluate" disabled');
  });

  it("renders safe_to_remove verbatim when present", () => {
    const fields = extractFields(
      renderWhatIfResult({ ...WHATIF, safe_to_remove: false }, false),
    );
    expect(fields.get("whatif.safe_to_remove")).toBe("false");
  });

  it("escapes markup in ids", () => {
    expect(escapeHtml("<img>")).toBe("&lt;img&gt;");
    const html = renderStagedActions(
      [{ kind: "repair_element", element_id: "<img src=x>" }],
      null,
    );
    expect(html).not.toContain("<img src=x>");
  });
});

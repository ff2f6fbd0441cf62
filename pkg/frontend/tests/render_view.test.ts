import { describe, expect, it } from "vitest";

import { HEX_DONE_COLOR, HEX_TODO_COLOR, userColor } from "../src/colors.js";
import { Renderer, type DrawContext } from "../src/render.js";
import { extentReport, makeView } from "../src/view.js";
import type { GeoFeature } from "../src/types.js";

function recordingContext() {
  const fills: string[] = [];
  const ops: string[] = [];
  const ctx: DrawContext = {
    fillStyle: "",
    strokeStyle: "",
    lineWidth: 1,
    beginPath: () => ops.push("beginPath"),
    moveTo: () => ops.push("moveTo"),
    lineTo: () => ops.push("lineTo"),
    arc: () => ops.push("arc"),
    closePath: () => ops.push("closePath"),
    fill: () => {
      ops.push("fill");
      fills.push(ctx.fillStyle);
    },
    stroke: () => ops.push("stroke"),
    fillText: (text: string) => ops.push(`text:${text}`),
    clearRect: () => ops.push("clear"),
  };
  return { ctx, fills, ops };
}

function hexCell(id: number, status: string): GeoFeature {
  return {
    type: "Feature",
    id,
    geometry: { type: "Polygon", coordinates: [[[0, 0], [1, 0], [1, 1], [0, 0]]] },
    properties: { q: id, r: 0, status, cumulated_ms: 0 },
  };
}

describe("user colors", () => {
  it("are stable and distinct per user", () => {
    expect(userColor("alice@1.2.3.4")).toBe(userColor("alice@1.2.3.4"));
    expect(userColor("alice@1.2.3.4")).not.toBe(userColor("bob@1.2.3.4"));
  });
});

describe("renderer overlays", () => {
  it("paints todo cells red and done cells blue", () => {
    const { ctx, fills } = recordingContext();
    const renderer = new Renderer(ctx, 800, 400);
    renderer.drawHexGrid(makeView(), [hexCell(1, "todo"), hexCell(2, "done")]);
    expect(fills).toEqual([HEX_TODO_COLOR, HEX_DONE_COLOR]);
  });

  it("labels conflicts on the map", () => {
    const { ctx, ops } = recordingContext();
    const renderer = new Renderer(ctx, 800, 400);
    renderer.drawConflicts(
      makeView(),
      [{ kind: "revisit", user_a: "a", user_b: "a", t_a: 0, t_b: 400000, overlap_area: 5 }],
      () => [0, 0],
    );
    expect(ops).toContain("text:revisit: a / a");
  });

  it("greys out interconnections merged to not-allowed", () => {
    const { ctx } = recordingContext();
    const renderer = new Renderer(ctx, 800, 400);
    const strokes: string[] = [];
    const originalStroke = Object.getOwnPropertyDescriptor(ctx, "strokeStyle");
    let current = "";
    Object.defineProperty(ctx, "strokeStyle", {
      get: () => current,
      set: (v: string) => {
        current = v;
        strokes.push(v);
      },
    });
    renderer.drawLayer(makeView(), "interconnection", [
      {
        type: "Feature",
        id: 1,
        geometry: { type: "LineString", coordinates: [[0, 0], [1, 1]] },
        properties: { allowed: false },
      },
    ]);
    expect(strokes).toContain("rgba(120,120,120,0.4)");
    if (originalStroke) Object.defineProperty(ctx, "strokeStyle", originalStroke);
  });
});

describe("extent reporting", () => {
  it("emits a rectangle only inside the scale band", () => {
    const band = { min: 1, max: 10000 };
    const inside = extentReport(makeView({ scale: 100, centerX: 50, centerY: 25 }), band, 2);
    expect(inside).toEqual([0, 0, 100, 50]);
    expect(extentReport(makeView({ scale: 0.5 }), band)).toBeNull();
    expect(extentReport(makeView({ scale: 1e6 }), band)).toBeNull();
  });
});

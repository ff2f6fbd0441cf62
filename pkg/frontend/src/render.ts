import { HEX_DONE_COLOR, HEX_TODO_COLOR, userColor } from "./colors.js";
import type { FeatureState } from "./state.js";
import type { ViewState } from "./view.js";
import type { ConflictHit, GeoFeature, Geometry } from "./types.js";

/** The slice of CanvasRenderingContext2D the renderer uses; tests pass a
 * recording stub. */
export interface DrawContext {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

const LAYER_STYLE: Record<string, { stroke: string; fill?: string; width: number }> = {
  section_surface: { stroke: "#555", fill: "rgba(120,120,120,0.5)", width: 1 },
  intersection_surface: { stroke: "#555", fill: "rgba(140,140,140,0.5)", width: 1 },
  edge: { stroke: "#222", width: 2 },
  lane: { stroke: "#888", width: 1 },
  interconnection: { stroke: "#2a7", width: 1 },
  node: { stroke: "#c22", width: 2 },
  street_object: { stroke: "#72c", width: 2 },
  pedestrian_crossing: { stroke: "#fff", fill: "rgba(255,255,255,0.7)", width: 1 },
};

export class Renderer {
  constructor(
    private ctx: DrawContext,
    private widthPx: number,
    private heightPx: number,
  ) {}

  private toScreen(view: ViewState, x: number, y: number): [number, number] {
    const pxPerM = this.widthPx / view.scale;
    return [
      this.widthPx / 2 + (x - view.centerX) * pxPerM,
      this.heightPx / 2 - (y - view.centerY) * pxPerM,
    ];
  }

  private path(view: ViewState, coords: number[][]): void {
    this.ctx.beginPath();
    coords.forEach(([x, y], i) => {
      const [sx, sy] = this.toScreen(view, x, y);
      if (i === 0) this.ctx.moveTo(sx, sy);
      else this.ctx.lineTo(sx, sy);
    });
  }

  drawGeometry(view: ViewState, geometry: Geometry, stroke: string, fill?: string): void {
    if (!geometry) return;
    this.ctx.strokeStyle = stroke;
    if (geometry.type === "Point") {
      const [sx, sy] = this.toScreen(view, geometry.coordinates[0], geometry.coordinates[1]);
      this.ctx.beginPath();
      this.ctx.arc(sx, sy, 4, 0, 2 * Math.PI);
      if (fill) {
        this.ctx.fillStyle = fill;
        this.ctx.fill();
      }
      this.ctx.stroke();
    } else if (geometry.type === "LineString") {
      this.path(view, geometry.coordinates);
      this.ctx.stroke();
    } else {
      this.path(view, geometry.coordinates[0]);
      this.ctx.closePath();
      if (fill) {
        this.ctx.fillStyle = fill;
        this.ctx.fill();
      }
      this.ctx.stroke();
    }
  }

  drawLayer(view: ViewState, layer: string, features: GeoFeature[]): void {
    const style = LAYER_STYLE[layer] ?? { stroke: "#333", width: 1 };
    this.ctx.lineWidth = style.width;
    for (const f of features) {
      if (layer === "interconnection" && f.properties["allowed"] === false) {
        this.drawGeometry(view, f.geometry, "rgba(120,120,120,0.4)");
        continue;
      }
      this.drawGeometry(view, f.geometry, style.stroke, style.fill);
    }
  }

  /** Hex todo grid: red while todo, blue once done. */
  drawHexGrid(view: ViewState, cells: GeoFeature[]): void {
    this.ctx.lineWidth = 1;
    for (const cell of cells) {
      const fill = cell.properties["status"] === "done" ? HEX_DONE_COLOR : HEX_TODO_COLOR;
      this.drawGeometry(view, cell.geometry, "rgba(0,0,0,0.2)", fill);
    }
  }

  /** Per-user colored extent trails. */
  drawExtents(view: ViewState, extents: GeoFeature[]): void {
    this.ctx.lineWidth = 1.5;
    for (const extent of extents) {
      const user = String(extent.properties["user_id"] ?? "");
      this.drawGeometry(view, extent.geometry, userColor(user));
    }
  }

  /** Conflict labels at the midpoint of the two users' extents in time. */
  drawConflicts(view: ViewState, hits: ConflictHit[], at: (hit: ConflictHit) => [number, number]): void {
    for (const hit of hits) {
      const [x, y] = at(hit);
      const [sx, sy] = this.toScreen(view, x, y);
      this.ctx.fillStyle = "#b00";
      this.ctx.fillText(`${hit.kind}: ${hit.user_a} / ${hit.user_b}`, sx, sy);
    }
  }

  render(view: ViewState, state: FeatureState, conflicts: ConflictHit[] = []): void {
    this.ctx.clearRect(0, 0, this.widthPx, this.heightPx);
    this.drawHexGrid(view, state.features("hex_grid"));
    for (const layer of [
      "section_surface",
      "intersection_surface",
      "pedestrian_crossing",
      "lane",
      "interconnection",
      "edge",
      "node",
      "street_object",
    ]) {
      if (view.visibleLayers.size === 0 || view.visibleLayers.has(layer)) {
        this.drawLayer(view, layer, state.features(layer));
      }
    }
    this.drawExtents(view, state.features("screen_extent"));
    this.drawConflicts(view, conflicts, () => [view.centerX, view.centerY]);
  }
}

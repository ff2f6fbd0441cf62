import { ApiClient } from "./api.js";
import type { FeatureState } from "./state.js";
import type { Geometry } from "./types.js";

export interface GestureResult {
  ok: boolean;
  message?: string;
}

/** Turns completed gestures into feature CRUD calls.
 *
 * There is no local uncommitted buffer: a gesture issues exactly one API
 * call and the map re-renders only when the resulting feed events arrive.
 * On failure the gesture is reported so the caller can revert the visual
 * and offer a retry.
 */
export class Editor {
  constructor(
    private api: ApiClient,
    private state: FeatureState,
  ) {}

  private async run(call: () => Promise<unknown>): Promise<GestureResult> {
    try {
      await call();
      return { ok: true };
    } catch (err) {
      return { ok: false, message: err instanceof Error ? err.message : String(err) };
    }
  }

  /** Vertex drop while drawing a point feature (nodes, controllers, objects). */
  placePoint(
    layer: string,
    x: number,
    y: number,
    properties: Record<string, unknown> = {},
  ): Promise<GestureResult> {
    return this.run(() =>
      this.api.create(layer, { type: "Point", coordinates: [x, y] }, properties),
    );
  }

  /** Completed line sketch (road axes). */
  placeLine(
    layer: string,
    coordinates: number[][],
    properties: Record<string, unknown> = {},
  ): Promise<GestureResult> {
    return this.run(() =>
      this.api.create(layer, { type: "LineString", coordinates }, properties),
    );
  }

  /** Completed polygon sketch (crossings, work areas, lenses). */
  placePolygon(
    layer: string,
    ring: number[][],
    properties: Record<string, unknown> = {},
  ): Promise<GestureResult> {
    return this.run(() =>
      this.api.create(layer, { type: "Polygon", coordinates: [ring] }, properties),
    );
  }

  /** Drag end on a whole feature or a controller point: one PUT. */
  dragEnd(layer: string, id: number, geometry: Geometry): Promise<GestureResult> {
    const current = this.state.get(layer, id);
    return this.run(() =>
      this.api.update(layer, id, geometry, current ? current.properties : {}),
    );
  }

  /** Attribute panel commit: one PUT with the currently rendered geometry. */
  commitAttributes(
    layer: string,
    id: number,
    properties: Record<string, unknown>,
  ): Promise<GestureResult> {
    const current = this.state.get(layer, id);
    return this.run(() =>
      this.api.update(layer, id, current ? current.geometry : null, properties),
    );
  }

  deleteFeature(layer: string, id: number): Promise<GestureResult> {
    return this.run(() => this.api.remove(layer, id));
  }
}

import type { FeedEvent, GeoFeature } from "./types.js";

/** Client-side mirror of the server's feature set.
 *
 * Zero-buffer contract: the mirror is only ever written from server
 * responses (initial GET) and feed events — never from local gestures —
 * so after the last in-flight call resolves it equals fresh GET results.
 */
export class FeatureState {
  private layers = new Map<string, Map<number, GeoFeature>>();
  lastSeq = 0;

  loadLayer(layer: string, features: GeoFeature[]): void {
    const m = new Map<number, GeoFeature>();
    for (const f of features) m.set(f.id, f);
    this.layers.set(layer, m);
  }

  features(layer: string): GeoFeature[] {
    const m = this.layers.get(layer);
    if (!m) return [];
    return [...m.values()].sort((a, b) => a.id - b.id);
  }

  get(layer: string, id: number): GeoFeature | undefined {
    return this.layers.get(layer)?.get(id);
  }

  /** Apply a feed event; returns the layer touched so callers can redraw it. */
  apply(event: FeedEvent): string {
    if (event.seq <= this.lastSeq) return event.layer; // replayed duplicate
    this.lastSeq = event.seq;
    let m = this.layers.get(event.layer);
    if (!m) {
      m = new Map();
      this.layers.set(event.layer, m);
    }
    if (event.kind === "delete") {
      m.delete(event.feature_id);
    } else if (event.feature) {
      m.set(event.feature.id, event.feature);
    }
    return event.layer;
  }
}

export type Geometry =
  | { type: "Point"; coordinates: number[] }
  | { type: "LineString"; coordinates: number[][] }
  | { type: "Polygon"; coordinates: number[][][] }
  | null;

export interface GeoFeature {
  type: "Feature";
  id: number;
  geometry: Geometry;
  properties: Record<string, unknown>;
}

export interface FeedEvent {
  seq: number;
  layer: string;
  kind: "insert" | "update" | "delete";
  feature_id: number;
  origin: string;
  feature?: GeoFeature;
}

export interface ConflictHit {
  kind: string;
  user_a: string;
  user_b: string;
  t_a: number;
  t_b: number;
  overlap_area: number;
}

export type Tool = "select" | "move-vertex" | "draw" | "attribute";

export interface ScaleBand {
  min: number;
  max: number;
}

import type { ScaleBand, Tool } from "./types.js";

export interface ViewState {
  centerX: number;
  centerY: number;
  /** map metres per screen-width, the browse scale */
  scale: number;
  visibleLayers: Set<string>;
  tool: Tool;
}

export function makeView(partial: Partial<ViewState> = {}): ViewState {
  return {
    centerX: 0,
    centerY: 0,
    scale: 100,
    visibleLayers: new Set(["edge", "node", "section_surface", "intersection_surface"]),
    tool: "select",
    ...partial,
  };
}

/** World-space rectangle of the viewport for a canvas of the given aspect. */
export function viewRect(
  view: ViewState,
  aspect: number,
): [number, number, number, number] {
  const halfW = view.scale / 2;
  const halfH = halfW / aspect;
  return [
    view.centerX - halfW,
    view.centerY - halfH,
    view.centerX + halfW,
    view.centerY + halfH,
  ];
}

/** Extent report for the current view: a plain rectangle (the server rounds
 * it), and only when the scale is inside the configured band. */
export function extentReport(
  view: ViewState,
  band: ScaleBand,
  aspect = 2,
): [number, number, number, number] | null {
  if (view.scale < band.min || view.scale > band.max) return null;
  return viewRect(view, aspect);
}

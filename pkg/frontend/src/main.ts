import { ApiClient } from "./api.js";
import { Editor } from "./editor.js";
import { FeedConnection } from "./feed.js";
import { Renderer } from "./render.js";
import { FeatureState } from "./state.js";
import { extentReport, makeView } from "./view.js";

const RENDER_LAYERS = [
  "node",
  "edge",
  "section_surface",
  "intersection_surface",
  "lane",
  "interconnection",
  "street_object",
  "pedestrian_crossing",
  "hex_grid",
  "screen_extent",
];

export async function start(canvas: HTMLCanvasElement, base: string, userId: string) {
  const api = new ApiClient(base);
  await api.openSession(userId);
  const state = new FeatureState();
  const view = makeView();
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const renderer = new Renderer(ctx, canvas.width, canvas.height);
  const editor = new Editor(api, state);

  for (const layer of RENDER_LAYERS) {
    state.loadLayer(layer, await api.features(layer));
  }
  let conflicts = await api.conflicts();
  renderer.render(view, state, conflicts);

  const wsBase = base.replace(/^http/, "ws");
  const feed = new FeedConnection(
    `${wsBase}/feed`,
    (event) => {
      state.apply(event);
      renderer.render(view, state, conflicts);
    },
    (url) => new WebSocket(url) as unknown as import("./feed.js").FeedSocket,
    state.lastSeq,
  );
  feed.connect();

  const band = { min: 1, max: 10000 };
  setInterval(async () => {
    const rect = extentReport(view, band, canvas.width / canvas.height);
    if (rect) await api.reportExtent(rect, Date.now(), view.scale);
    conflicts = await api.conflicts();
  }, 5000);

  return { api, state, view, renderer, editor, feed };
}

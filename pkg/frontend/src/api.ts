import type { ConflictHit, FeedEvent, GeoFeature, Geometry } from "./types.js";

type Fetch = typeof fetch;

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public layer?: string,
    public feature?: number,
  ) {
    super(message);
  }
}

/** Thin typed wrapper over the service HTTP API; fetch is injectable for tests. */
export class ApiClient {
  private session: string | null = null;

  constructor(
    private base: string,
    private fetchFn: Fetch = fetch,
  ) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.session) h["X-Session"] = this.session;
    return h;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (res.status === 204) return null;
    const data = (await res.json()) as Record<string, unknown>;
    if (!res.ok) {
      throw new ApiError(
        String(data.code ?? "Error"),
        String(data.message ?? res.statusText),
        data.layer as string | undefined,
        data.feature as number | undefined,
      );
    }
    return data;
  }

  async openSession(userId: string): Promise<string> {
    const data = (await this.request("POST", "/sessions", { user_id: userId })) as {
      session: string;
      user_id: string;
    };
    this.session = data.session;
    return data.user_id;
  }

  async layers(): Promise<string[]> {
    const data = (await this.request("GET", "/layers")) as { layers: string[] };
    return data.layers;
  }

  async features(layer: string, bbox?: [number, number, number, number]): Promise<GeoFeature[]> {
    const query = bbox ? `?bbox=${bbox.join(",")}` : "";
    const data = (await this.request("GET", `/layers/${layer}/features${query}`)) as {
      features: GeoFeature[];
    };
    return data.features;
  }

  create(layer: string, geometry: Geometry, properties: Record<string, unknown>): Promise<unknown> {
    return this.request("POST", `/layers/${layer}/features`, {
      type: "Feature",
      geometry,
      properties,
    });
  }

  update(
    layer: string,
    id: number,
    geometry: Geometry,
    properties: Record<string, unknown>,
  ): Promise<unknown> {
    return this.request("PUT", `/layers/${layer}/features/${id}`, {
      type: "Feature",
      geometry,
      properties,
    });
  }

  remove(layer: string, id: number): Promise<unknown> {
    return this.request("DELETE", `/layers/${layer}/features/${id}`);
  }

  reportExtent(rect: [number, number, number, number], t: number, scale: number): Promise<unknown> {
    return this.request("POST", "/extents", { rect, t, scale });
  }

  async conflicts(): Promise<ConflictHit[]> {
    const data = (await this.request("GET", "/conflicts")) as { conflicts: ConflictHit[] };
    return data.conflicts;
  }

  async changes(since: number): Promise<{ events: FeedEvent[]; last_seq: number }> {
    return (await this.request("GET", `/changes?since=${since}`)) as {
      events: FeedEvent[];
      last_seq: number;
    };
  }
}

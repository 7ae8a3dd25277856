import type {
  ControlCommand,
  Meta,
  SlotSnapshot,
  TelemetryRecord,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface EventQuery {
  from_ms?: number;
  to_ms?: number;
  kinds?: string[];
  slot?: number;
  node?: number;
  after_seq?: number;
}

/** Thin client for the /api/v1 query and control surface. */
export class ApiClient {
  constructor(public readonly baseUrl: string) {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(`${this.baseUrl}/api/v1${path}`);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as T;
  }

  meta(): Promise<Meta> {
    return this.getJson("/meta");
  }

  events(query: EventQuery = {}): Promise<TelemetryRecord[]> {
    const params = new URLSearchParams();
    if (query.from_ms !== undefined) params.set("from_ms", String(query.from_ms));
    if (query.to_ms !== undefined) params.set("to_ms", String(query.to_ms));
    if (query.kinds !== undefined) params.set("kinds", query.kinds.join(","));
    if (query.slot !== undefined) params.set("slot", String(query.slot));
    if (query.node !== undefined) params.set("node", String(query.node));
    if (query.after_seq !== undefined) params.set("after_seq", String(query.after_seq));
    const qs = params.toString();
    return this.getJson(`/events${qs ? `?${qs}` : ""}`);
  }

  snapshot(slot: number): Promise<SlotSnapshot> {
    return this.getJson(`/snapshot/${slot}`);
  }

  async control(
    cmd: ControlCommand,
    extra: { target?: number; value?: number } = {},
  ): Promise<Record<string, unknown>> {
    const res = await fetch(`${this.baseUrl}/api/v1/control`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cmd, ...extra }),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as Record<string, unknown>;
  }

  /**
   * Subscribe to the live event stream (browser only). Returns a
   * close function. Each frame is one telemetry record as JSON.
   */
  openStream(
    afterSeq: number | null,
    onRecord: (record: TelemetryRecord) => void,
    onClose: () => void,
  ): () => void {
    const ws = new WebSocket(
      `${this.baseUrl.replace(/^http/, "ws")}/api/v1/stream` +
        (afterSeq === null ? "" : `?after_seq=${afterSeq}`),
    );
    ws.onmessage = (msg) => onRecord(JSON.parse(msg.data as string) as TelemetryRecord);
    ws.onclose = onClose;
    ws.onerror = () => ws.close();
    return () => ws.close();
  }
}

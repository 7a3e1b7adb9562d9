import type {
  AlertBatch,
  FdirStateDoc,
  FramesOutcomeDoc,
  HealthDoc,
  HeatmapDoc,
  HeatmapQuery,
  RuleDoc,
  ScenarioEvent,
  ScenarioResponse,
  TopologyDoc,
} from "./types.js";

/** Error raised for any non-2xx response, carrying the service's own
 * error code and message so views can surface them verbatim. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service HTTP API.  The server stays the
 * source of truth; this class only moves documents back and forth. */
export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly base: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (typeof body === "string") {
      init.body = body;
    } else if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "content-type": "application/json" };
    }
    const resp = await this.fetchFn(this.base + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let code = `http_${resp.status}`;
      let message = text;
      try {
        const doc = JSON.parse(text) as { error?: string; message?: string };
        code = doc.error ?? code;
        message = doc.message ?? message;
      } catch {
        // a non-JSON error body is surfaced as-is
      }
      throw new ApiError(resp.status, code, message);
    }
    return (text === "" ? undefined : JSON.parse(text)) as T;
  }

  health(): Promise<HealthDoc> {
    return this.request("GET", "/healthz");
  }

  listRules(): Promise<RuleDoc[]> {
    return this.request("GET", "/rules");
  }

  getRule(id: string): Promise<RuleDoc> {
    return this.request("GET", `/rules/${encodeURIComponent(id)}`);
  }

  /** Idempotent by rule id: repeating the same PUT replaces in place. */
  putRule(doc: RuleDoc): Promise<RuleDoc> {
    return this.request("PUT", `/rules/${encodeURIComponent(doc.id)}`, doc);
  }

  deleteRule(id: string): Promise<void> {
    return this.request("DELETE", `/rules/${encodeURIComponent(id)}`);
  }

  postFrames(frameText: string): Promise<FramesOutcomeDoc> {
    return this.request("POST", "/frames", frameText);
  }

  /** Alerts whose firedAt tick is at or after the given tick. */
  alertsFiredSince(tick: number): Promise<AlertBatch> {
    return this.request("GET", `/alerts?since=${tick}`);
  }

  /** Long poll: returns alerts with seq beyond the cursor, or an empty
   * batch once the server-side timeout expires. */
  streamAlerts(seq: number, timeoutS: number): Promise<AlertBatch> {
    return this.request("GET", `/alerts/stream?seq=${seq}&timeout=${timeoutS}`);
  }

  heatmap(q: HeatmapQuery): Promise<HeatmapDoc> {
    const region = `${q.region.x1},${q.region.y1},${q.region.x2},${q.region.y2}`;
    const aggregate = q.aggregate ?? "max";
    return this.request(
      "GET",
      `/heatmap?region=${region}&t1=${q.t1}&t2=${q.t2}&cell=${q.cell}&aggregate=${aggregate}`,
    );
  }

  fdirScenario(topology: TopologyDoc, events: ScenarioEvent[]): Promise<ScenarioResponse> {
    return this.request("POST", "/fdir/scenario", { topology, events });
  }

  fdirState(): Promise<FdirStateDoc> {
    return this.request("GET", "/fdir/state");
  }
}

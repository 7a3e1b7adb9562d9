import type { ApiClient } from "./api.js";
import type { AlertBatch, AlertRecord } from "./types.js";

export interface FeedState {
  alerts: AlertRecord[];
  cursor: number;
}

export function emptyFeed(): FeedState {
  return { alerts: [], cursor: 0 };
}

/** Fold one poll result into the feed.  Records are deduplicated by
 * sequence number and the cursor only ever moves forward, so replaying
 * a batch is harmless. */
export function mergeBatch(state: FeedState, batch: AlertBatch): FeedState {
  const seen = new Set(state.alerts.map((a) => a.seq));
  const alerts = state.alerts.slice();
  let cursor = Math.max(state.cursor, batch.lastSeq);
  for (const alert of batch.alerts) {
    if (seen.has(alert.seq)) {
      continue;
    }
    seen.add(alert.seq);
    alerts.push(alert);
    cursor = Math.max(cursor, alert.seq);
  }
  alerts.sort((a, b) => a.seq - b.seq);
  return { alerts, cursor };
}

/** Display order: most urgent priority first, newest first within the
 * same priority. */
export function orderedForDisplay(alerts: AlertRecord[]): AlertRecord[] {
  return alerts
    .slice()
    .sort((a, b) => (a.priority !== b.priority ? a.priority - b.priority : b.seq - a.seq));
}

export const DEFAULT_POLL_SECONDS = 5;

/** Long-poll loop with at most one request in flight at a time. */
export class AlertFeed {
  state: FeedState = emptyFeed();
  lastError: string | null = null;

  private inFlight = false;
  private stopped = true;

  constructor(
    private readonly client: ApiClient,
    private readonly pollSeconds: number = DEFAULT_POLL_SECONDS,
    private readonly onChange: (state: FeedState) => void = () => {},
  ) {}

  /** One poll step; resolves false when a poll is already running. */
  async pollOnce(): Promise<boolean> {
    if (this.inFlight) {
      return false;
    }
    this.inFlight = true;
    try {
      const batch = await this.client.streamAlerts(this.state.cursor, this.pollSeconds);
      this.lastError = null;
      const merged = mergeBatch(this.state, batch);
      if (merged.alerts.length !== this.state.alerts.length || merged.cursor !== this.state.cursor) {
        this.state = merged;
        this.onChange(this.state);
      }
      return true;
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return true;
    } finally {
      this.inFlight = false;
    }
  }

  start(): void {
    if (!this.stopped) {
      return;
    }
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      await this.pollOnce();
      if (this.lastError !== null && !this.stopped) {
        await new Promise((resolve) => setTimeout(resolve, this.pollSeconds * 1000));
      }
    }
  }
}

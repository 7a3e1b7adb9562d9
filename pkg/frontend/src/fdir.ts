import type { ApiClient } from "./api.js";
import type {
  PlanActionDoc,
  ScenarioEvent,
  ScenarioResponse,
  SwitchNodeDoc,
  TopologyDoc,
} from "./types.js";

export function describeAction(action: PlanActionDoc): string {
  if (action.action === "open") {
    return `open ${action.switch}`;
  }
  if (action.action === "close") {
    return `close ${action.switch}`;
  }
  const load = action.expected_load_kw ?? 0;
  return `set relay on ${action.switch} to ${load} kW`;
}

export function switchViews(topo: TopologyDoc): SwitchNodeDoc[] {
  return topo.nodes.filter((n): n is SwitchNodeDoc => n.type === "switch");
}

export function edgeIds(topo: TopologyDoc): string[] {
  return topo.edges.map((e) => e.id);
}

/** The scenario driver behind the panel.  It keeps the original
 * topology plus an event list and replays the whole list on every
 * change, so the server recomputes everything and the view can never
 * drift from what a fresh replay would say. */
export class FdirPanel {
  topology: TopologyDoc | null = null;
  events: ScenarioEvent[] = [];
  result: ScenarioResponse | null = null;

  constructor(private readonly client: ApiClient) {}

  loadTopology(jsonText: string): TopologyDoc {
    const doc = JSON.parse(jsonText) as TopologyDoc;
    if (!Array.isArray(doc.nodes) || !Array.isArray(doc.edges)) {
      throw new Error("a topology document needs nodes and edges arrays");
    }
    this.topology = doc;
    this.events = [];
    this.result = null;
    return doc;
  }

  async injectFault(edgeId: string): Promise<ScenarioResponse> {
    return this.pushEvent({ type: "fault", edge: edgeId });
  }

  async applyRestore(edgeId: string): Promise<ScenarioResponse> {
    return this.pushEvent({ type: "clearFault", edge: edgeId });
  }

  async advanceClock(seconds: number): Promise<ScenarioResponse> {
    return this.pushEvent({ type: "tick", seconds });
  }

  /** Actions of the most recent step, in execution order. */
  latestPlan(): PlanActionDoc[] {
    if (this.result === null || this.result.steps.length === 0) {
      return [];
    }
    const last = this.result.steps[this.result.steps.length - 1];
    return last === undefined ? [] : last.plan;
  }

  private async pushEvent(event: ScenarioEvent): Promise<ScenarioResponse> {
    if (this.topology === null) {
      throw new Error("load a topology first");
    }
    this.events.push(event);
    try {
      this.result = await this.client.fdirScenario(this.topology, this.events);
    } catch (err) {
      this.events.pop();
      throw err;
    }
    return this.result;
  }
}

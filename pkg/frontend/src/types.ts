/** Document shapes exchanged with the decision service HTTP API. */

export interface Box {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface RuleWindowDoc {
  sliding?: number;
  t1?: number;
  t2?: number;
}

export interface DisplayDoc {
  kind: string;
  base_layer?: string;
  boxes?: Box[];
  url?: string;
  text?: string;
}

export interface ReactionSpecDoc {
  displays: DisplayDoc[];
  severity?: string;
}

export interface RuleDoc {
  id: string;
  priority: number;
  window: RuleWindowDoc;
  areas: Box[];
  owner: string;
  metric: string;
  threshold: number;
  eval_step?: number;
  severity?: string;
  stakeholders: string[];
  reaction: ReactionSpecDoc;
}

export interface MeasuredArea extends Box {
  measured: number;
}

export interface AlertRecord {
  seq: number;
  ruleId: string;
  firedAt: number;
  severity: string;
  priority: number;
  stakeholders: string[];
  perArea: MeasuredArea[];
  xml: string;
}

export interface AlertBatch {
  alerts: AlertRecord[];
  lastSeq: number;
}

export interface FramesOutcomeDoc {
  accepted: number;
  duplicates: number;
  revision: number;
  alerts: AlertRecord[];
}

export interface HeatmapDoc {
  region: Box;
  cell_size: number;
  width: number;
  height: number;
  raw: number[];
  scores: number[];
  missing_quantities: boolean;
}

export interface HeatmapQuery {
  region: Box;
  t1: number;
  t2: number;
  cell: number;
  aggregate?: "max" | "mean";
}

export interface SourceNodeDoc {
  id: string;
  type: "source";
  capacity_kw: number;
}

export interface SwitchNodeDoc {
  id: string;
  type: "switch";
  state: "open" | "closed";
  kind: string;
}

export interface LoadNodeDoc {
  id: string;
  type: "load";
  demand_kw: number;
  customers: number;
}

export type TopologyNodeDoc = SourceNodeDoc | SwitchNodeDoc | LoadNodeDoc;

export interface TopologyEdgeDoc {
  id: string;
  a: string;
  b: string;
  capacity_kw: number;
}

export interface TopologyDoc {
  nodes: TopologyNodeDoc[];
  edges: TopologyEdgeDoc[];
  faults?: string[];
}

export interface ScenarioEvent {
  type: string;
  edge?: string;
  seconds?: number;
  readings?: Record<string, number>;
}

export interface PlanActionDoc {
  action: "open" | "close" | "relay-setting";
  switch: string;
  expected_load_kw?: number;
}

export interface ScenarioStepDoc {
  event: ScenarioEvent;
  t: number;
  opened: string[];
  plan: PlanActionDoc[];
  infeasible: string[];
  dark_loads: string[];
}

export interface InterruptionDoc {
  load: string;
  customers: number;
  duration_minutes: number;
}

export interface ReliabilityReportDoc {
  saidi_minutes: number;
  caidi_minutes: number | null;
  caidi_defined: boolean;
  interruptions: InterruptionDoc[];
}

export interface ScenarioResponse {
  steps: ScenarioStepDoc[];
  report: ReliabilityReportDoc;
  final: TopologyDoc;
}

export interface FdirStateDoc {
  topology: TopologyDoc | null;
  report: ReliabilityReportDoc | null;
}

export interface HealthDoc {
  status: string;
  revision: number;
  rules: number;
  lastAlertSeq: number;
}

/** Severity label the service assigns to cloud-cover rules by default. */
export const CRITICAL_SEVERITY = "critical solar energy level";

import type { Box, DisplayDoc, RuleDoc } from "./types.js";

/** What the rule editor form holds before it becomes a rule document. */
export interface RuleFormValues {
  id: string;
  priority: string;
  windowKind: "sliding" | "absolute";
  sliding: string;
  t1: string;
  t2: string;
  /** One "x1,y1,x2,y2" area per line. */
  areasText: string;
  owner: string;
  metric: string;
  threshold: string;
  stakeholdersText: string;
  severity: string;
  displayKind: string;
  baseLayer: string;
  displayText: string;
  displayUrl: string;
}

export function emptyRuleForm(): RuleFormValues {
  return {
    id: "",
    priority: "1",
    windowKind: "sliding",
    sliding: "300",
    t1: "0",
    t2: "0",
    areasText: "",
    owner: "cloud",
    metric: "covered_cells",
    threshold: "1",
    stakeholdersText: "operator",
    severity: "",
    displayKind: "text-alert",
    baseLayer: "",
    displayText: "",
    displayUrl: "",
  };
}

function requireNumber(label: string, text: string): number {
  const value = Number(text.trim());
  if (text.trim() === "" || !Number.isFinite(value)) {
    throw new Error(`${label} must be a number, got "${text}"`);
  }
  return value;
}

export function parseAreas(text: string): Box[] {
  const areas: Box[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "") {
      continue;
    }
    const parts = trimmed.split(",").map((p) => Number(p.trim()));
    if (parts.length !== 4 || parts.some((p) => !Number.isInteger(p))) {
      throw new Error(`area "${trimmed}" must be four integers x1,y1,x2,y2`);
    }
    const [x1, y1, x2, y2] = parts as [number, number, number, number];
    areas.push({ x1, y1, x2, y2 });
  }
  if (areas.length === 0) {
    throw new Error("at least one area is required");
  }
  return areas;
}

/** Build the rule document a PUT expects.  Only shallow shape checks
 * happen here; the service remains the authority and its rejections
 * are shown verbatim. */
export function ruleDocFromForm(values: RuleFormValues): RuleDoc {
  const id = values.id.trim();
  if (id === "") {
    throw new Error("rule id is required");
  }
  const window =
    values.windowKind === "sliding"
      ? { sliding: requireNumber("sliding window", values.sliding) }
      : {
          t1: requireNumber("window start", values.t1),
          t2: requireNumber("window stop", values.t2),
        };
  const display: DisplayDoc = { kind: values.displayKind };
  if (values.displayKind === "map-overlay") {
    if (values.baseLayer.trim() === "") {
      throw new Error("a map overlay needs a base layer name");
    }
    display.base_layer = values.baseLayer.trim();
  } else if (values.displayKind === "url") {
    if (values.displayUrl.trim() === "") {
      throw new Error("a url display needs a url");
    }
    display.url = values.displayUrl.trim();
  } else {
    if (values.displayText.trim() === "") {
      throw new Error("a text alert needs its text");
    }
    display.text = values.displayText.trim();
  }
  const stakeholders = values.stakeholdersText
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s !== "");
  if (stakeholders.length === 0) {
    throw new Error("at least one stakeholder is required");
  }
  const doc: RuleDoc = {
    id,
    priority: requireNumber("priority", values.priority),
    window,
    areas: parseAreas(values.areasText),
    owner: values.owner.trim() || "cloud",
    metric: values.metric,
    threshold: requireNumber("threshold", values.threshold),
    stakeholders,
    reaction: { displays: [display] },
  };
  if (values.severity.trim() !== "") {
    doc.severity = values.severity.trim();
  }
  return doc;
}

/** Load an existing document back into the editor. */
export function formFromRuleDoc(doc: RuleDoc): RuleFormValues {
  const form = emptyRuleForm();
  form.id = doc.id;
  form.priority = String(doc.priority);
  if (doc.window.sliding !== undefined) {
    form.windowKind = "sliding";
    form.sliding = String(doc.window.sliding);
  } else {
    form.windowKind = "absolute";
    form.t1 = String(doc.window.t1 ?? 0);
    form.t2 = String(doc.window.t2 ?? 0);
  }
  form.areasText = doc.areas.map((a) => `${a.x1},${a.y1},${a.x2},${a.y2}`).join("\n");
  form.owner = doc.owner;
  form.metric = doc.metric;
  form.threshold = String(doc.threshold);
  form.stakeholdersText = doc.stakeholders.join(", ");
  form.severity = doc.severity ?? "";
  const display = doc.reaction.displays[0];
  if (display !== undefined) {
    form.displayKind = display.kind;
    form.baseLayer = display.base_layer ?? "";
    form.displayText = display.text ?? "";
    form.displayUrl = display.url ?? "";
  }
  return form;
}

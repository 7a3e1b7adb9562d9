import { orderedForDisplay, type FeedState } from "./feed.js";
import { describeAction } from "./fdir.js";
import type {
  AlertRecord,
  PlanActionDoc,
  ReliabilityReportDoc,
  RuleDoc,
  ScenarioStepDoc,
  TopologyDoc,
} from "./types.js";
import { CRITICAL_SEVERITY } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function severityBadge(severity: string): string {
  const cls = severity === CRITICAL_SEVERITY ? "badge badge-critical" : "badge";
  return `<span class="${cls}">${escapeHtml(severity)}</span>`;
}

export function alertCard(alert: AlertRecord): string {
  const areas = alert.perArea
    .map(
      (a) =>
        `<li>(${a.x1},${a.y1})..(${a.x2},${a.y2}) measured ${a.measured}</li>`,
    )
    .join("");
  return (
    `<article class="alert-card" data-seq="${alert.seq}">` +
    `<header>${severityBadge(alert.severity)}` +
    `<span class="rule-id">${escapeHtml(alert.ruleId)}</span>` +
    `<span class="fired-at">t=${alert.firedAt}</span>` +
    `<span class="priority">p${alert.priority}</span></header>` +
    `<ul class="areas">${areas}</ul>` +
    `<footer>to ${escapeHtml(alert.stakeholders.join(", "))}</footer>` +
    "</article>"
  );
}

export function alertFeedHtml(state: FeedState): string {
  if (state.alerts.length === 0) {
    return '<p class="empty">No alerts yet.</p>';
  }
  return orderedForDisplay(state.alerts).map(alertCard).join("");
}

export function ruleRow(doc: RuleDoc): string {
  const windowText =
    doc.window.sliding !== undefined
      ? `sliding ${doc.window.sliding}`
      : `${doc.window.t1}..${doc.window.t2}`;
  return (
    `<tr data-rule-id="${escapeHtml(doc.id)}">` +
    `<td>${escapeHtml(doc.id)}</td>` +
    `<td>${doc.priority}</td>` +
    `<td>${escapeHtml(windowText)}</td>` +
    `<td>${escapeHtml(doc.metric)} &ge; ${doc.threshold}</td>` +
    `<td>${doc.areas.length}</td>` +
    `<td><button class="edit" data-rule-id="${escapeHtml(doc.id)}">edit</button>` +
    ` <button class="delete" data-rule-id="${escapeHtml(doc.id)}">delete</button></td>` +
    "</tr>"
  );
}

export function rulesTable(docs: RuleDoc[]): string {
  if (docs.length === 0) {
    return '<p class="empty">No rules installed.</p>';
  }
  const rows = docs.map(ruleRow).join("");
  return (
    '<table class="rules"><thead><tr>' +
    "<th>id</th><th>priority</th><th>window</th><th>condition</th><th>areas</th><th></th>" +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function planList(actions: PlanActionDoc[]): string {
  if (actions.length === 0) {
    return '<p class="empty">No switching needed.</p>';
  }
  const items = actions
    .map((a) => `<li>${escapeHtml(describeAction(a))}</li>`)
    .join("");
  return `<ol class="plan">${items}</ol>`;
}

export function stepSummary(step: ScenarioStepDoc): string {
  const opened = step.opened.length > 0 ? `opened ${step.opened.join(", ")}` : "nothing opened";
  const dark = step.dark_loads.length > 0 ? `dark: ${step.dark_loads.join(", ")}` : "all loads served";
  return (
    `<section class="step"><h4>t=${step.t} ${escapeHtml(step.event.type)}</h4>` +
    `<p>${escapeHtml(opened)}; ${escapeHtml(dark)}</p>` +
    planList(step.plan) +
    "</section>"
  );
}

export function topologyTable(topo: TopologyDoc): string {
  const rows = topo.nodes
    .map((n) => {
      if (n.type === "source") {
        return `<tr><td>${escapeHtml(n.id)}</td><td>source</td><td>${n.capacity_kw} kW capacity</td></tr>`;
      }
      if (n.type === "switch") {
        return `<tr><td>${escapeHtml(n.id)}</td><td>switch</td><td>${escapeHtml(n.state)} ${escapeHtml(n.kind)}</td></tr>`;
      }
      return `<tr><td>${escapeHtml(n.id)}</td><td>load</td><td>${n.demand_kw} kW, ${n.customers} customers</td></tr>`;
    })
    .join("");
  const faults = (topo.faults ?? []).join(", ") || "none";
  return (
    `<table class="topology"><tbody>${rows}</tbody></table>` +
    `<p class="faults">faults: ${escapeHtml(faults)}</p>`
  );
}

export function reportSummary(report: ReliabilityReportDoc): string {
  const caidi = report.caidi_defined ? `${report.caidi_minutes}` : "undefined";
  return (
    `<p class="report">SAIDI ${report.saidi_minutes} min, CAIDI ${escapeHtml(caidi)} min, ` +
    `${report.interruptions.length} interruption(s)</p>`
  );
}

/** API failures keep their exact wording and offer a retry. */
export function errorBanner(message: string, retryLabel = "retry"): string {
  return (
    `<div class="error-banner"><span>${escapeHtml(message)}</span>` +
    `<button class="retry">${escapeHtml(retryLabel)}</button></div>`
  );
}

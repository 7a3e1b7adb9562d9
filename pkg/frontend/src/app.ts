import { ApiClient, ApiError } from "./api.js";
import { AlertFeed } from "./feed.js";
import { FdirPanel, edgeIds } from "./fdir.js";
import { highlightBoxes, renderHeatmapHtml } from "./heatmap.js";
import {
  alertFeedHtml,
  errorBanner,
  planList,
  reportSummary,
  rulesTable,
  stepSummary,
  topologyTable,
} from "./render.js";
import {
  emptyRuleForm,
  formFromRuleDoc,
  ruleDocFromForm,
  type RuleFormValues,
} from "./rules.js";
import type { HeatmapDoc, RuleDoc } from "./types.js";

const client = new ApiClient("");
const feed = new AlertFeed(client, 5, () => {
  renderAlerts();
  void refreshHeatmap();
});
const panel = new FdirPanel(client);

let rules: RuleDoc[] = [];
let lastHeatmap: HeatmapDoc | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showError(target: HTMLElement, err: unknown, retry: () => void): void {
  const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  target.innerHTML = errorBanner(message);
  target.querySelector("button.retry")?.addEventListener("click", retry);
}

function formValues(): RuleFormValues {
  return {
    id: el<HTMLInputElement>("rule-id").value,
    priority: el<HTMLInputElement>("rule-priority").value,
    windowKind: el<HTMLSelectElement>("rule-window-kind").value as "sliding" | "absolute",
    sliding: el<HTMLInputElement>("rule-sliding").value,
    t1: el<HTMLInputElement>("rule-t1").value,
    t2: el<HTMLInputElement>("rule-t2").value,
    areasText: el<HTMLTextAreaElement>("rule-areas").value,
    owner: el<HTMLInputElement>("rule-owner").value,
    metric: el<HTMLSelectElement>("rule-metric").value,
    threshold: el<HTMLInputElement>("rule-threshold").value,
    stakeholdersText: el<HTMLInputElement>("rule-stakeholders").value,
    severity: el<HTMLInputElement>("rule-severity").value,
    displayKind: el<HTMLSelectElement>("rule-display-kind").value,
    baseLayer: el<HTMLInputElement>("rule-base-layer").value,
    displayText: el<HTMLInputElement>("rule-display-text").value,
    displayUrl: el<HTMLInputElement>("rule-display-url").value,
  };
}

function fillForm(values: RuleFormValues): void {
  el<HTMLInputElement>("rule-id").value = values.id;
  el<HTMLInputElement>("rule-priority").value = values.priority;
  el<HTMLSelectElement>("rule-window-kind").value = values.windowKind;
  el<HTMLInputElement>("rule-sliding").value = values.sliding;
  el<HTMLInputElement>("rule-t1").value = values.t1;
  el<HTMLInputElement>("rule-t2").value = values.t2;
  el<HTMLTextAreaElement>("rule-areas").value = values.areasText;
  el<HTMLInputElement>("rule-owner").value = values.owner;
  el<HTMLSelectElement>("rule-metric").value = values.metric;
  el<HTMLInputElement>("rule-threshold").value = values.threshold;
  el<HTMLInputElement>("rule-stakeholders").value = values.stakeholdersText;
  el<HTMLInputElement>("rule-severity").value = values.severity;
  el<HTMLSelectElement>("rule-display-kind").value = values.displayKind;
  el<HTMLInputElement>("rule-base-layer").value = values.baseLayer;
  el<HTMLInputElement>("rule-display-text").value = values.displayText;
  el<HTMLInputElement>("rule-display-url").value = values.displayUrl;
}

function renderRules(): void {
  const box = el("rules-list");
  box.innerHTML = rulesTable(rules);
  for (const button of box.querySelectorAll<HTMLButtonElement>("button.edit")) {
    button.addEventListener("click", () => {
      const doc = rules.find((r) => r.id === button.dataset.ruleId);
      if (doc !== undefined) {
        fillForm(formFromRuleDoc(doc));
      }
    });
  }
  for (const button of box.querySelectorAll<HTMLButtonElement>("button.delete")) {
    button.addEventListener("click", () => {
      void (async () => {
        try {
          await client.deleteRule(button.dataset.ruleId ?? "");
          await refreshRules();
        } catch (err) {
          showError(el("rules-status"), err, () => void refreshRules());
        }
      })();
    });
  }
}

async function refreshRules(): Promise<void> {
  try {
    rules = await client.listRules();
    el("rules-status").innerHTML = "";
    renderRules();
  } catch (err) {
    showError(el("rules-status"), err, () => void refreshRules());
  }
}

function renderAlerts(): void {
  el("alert-feed").innerHTML = alertFeedHtml(feed.state);
  if (feed.lastError !== null) {
    showError(el("alerts-status"), feed.lastError, () => void feed.pollOnce());
  } else {
    el("alerts-status").innerHTML = "";
  }
}

async function refreshHeatmap(): Promise<void> {
  const regionText = el<HTMLInputElement>("heat-region").value;
  const parts = regionText.split(",").map((p) => Number(p.trim()));
  if (parts.length !== 4 || parts.some((p) => !Number.isInteger(p))) {
    el("heatmap-box").innerHTML = errorBanner(`region "${regionText}" must be x1,y1,x2,y2`);
    return;
  }
  const [x1, y1, x2, y2] = parts as [number, number, number, number];
  try {
    lastHeatmap = await client.heatmap({
      region: { x1, y1, x2, y2 },
      t1: Number(el<HTMLInputElement>("heat-t1").value),
      t2: Number(el<HTMLInputElement>("heat-t2").value),
      cell: Number(el<HTMLInputElement>("heat-cell").value),
      aggregate: el<HTMLSelectElement>("heat-aggregate").value as "max" | "mean",
    });
    el("heatmap-box").innerHTML = renderHeatmapHtml(
      lastHeatmap,
      highlightBoxes(feed.state.alerts),
    );
  } catch (err) {
    showError(el("heatmap-box"), err, () => void refreshHeatmap());
  }
}

function renderFdir(): void {
  const details = el("fdir-details");
  if (panel.topology === null) {
    details.innerHTML = '<p class="empty">Paste a topology document and load it.</p>';
    return;
  }
  const shown = panel.result === null ? panel.topology : panel.result.final;
  let html = topologyTable(shown);
  if (panel.result !== null) {
    html += "<h3>Plan</h3>" + planList(panel.latestPlan());
    html += "<h3>Steps</h3>" + panel.result.steps.map(stepSummary).join("");
    html += reportSummary(panel.result.report);
  }
  details.innerHTML = html;
  const picker = el<HTMLSelectElement>("fdir-edge");
  const current = picker.value;
  picker.innerHTML = edgeIds(panel.topology)
    .map((id) => `<option value="${id}">${id}</option>`)
    .join("");
  if (current !== "") {
    picker.value = current;
  }
}

function wireFdir(): void {
  el<HTMLButtonElement>("fdir-load").addEventListener("click", () => {
    try {
      panel.loadTopology(el<HTMLTextAreaElement>("fdir-topology").value);
      el("fdir-status").innerHTML = "";
      renderFdir();
    } catch (err) {
      showError(el("fdir-status"), err, () => undefined);
    }
  });
  const run = (action: (edge: string) => Promise<unknown>) => {
    void (async () => {
      try {
        await action(el<HTMLSelectElement>("fdir-edge").value);
        el("fdir-status").innerHTML = "";
        renderFdir();
      } catch (err) {
        showError(el("fdir-status"), err, () => undefined);
      }
    })();
  };
  el<HTMLButtonElement>("fdir-fault").addEventListener("click", () =>
    run((edge) => panel.injectFault(edge)),
  );
  el<HTMLButtonElement>("fdir-restore").addEventListener("click", () =>
    run((edge) => panel.applyRestore(edge)),
  );
  el<HTMLButtonElement>("fdir-tick").addEventListener("click", () =>
    run(() => panel.advanceClock(Number(el<HTMLInputElement>("fdir-seconds").value) || 60)),
  );
}

function wireTabs(): void {
  for (const link of document.querySelectorAll<HTMLAnchorElement>("nav a[data-view]")) {
    link.addEventListener("click", (event) => {
      event.preventDefault();
      for (const view of document.querySelectorAll<HTMLElement>("main > section")) {
        view.hidden = view.id !== link.dataset.view;
      }
    });
  }
}

function wireRuleForm(): void {
  el<HTMLFormElement>("rule-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      try {
        const doc = ruleDocFromForm(formValues());
        await client.putRule(doc);
        await refreshRules();
      } catch (err) {
        showError(el("rules-status"), err, () => undefined);
      }
    })();
  });
  el<HTMLButtonElement>("rule-clear").addEventListener("click", () => {
    fillForm(emptyRuleForm());
  });
}

function boot(): void {
  wireTabs();
  wireRuleForm();
  wireFdir();
  el<HTMLButtonElement>("heat-refresh").addEventListener("click", () => void refreshHeatmap());
  fillForm(emptyRuleForm());
  void refreshRules();
  renderFdir();
  feed.start();
  renderAlerts();
}

document.addEventListener("DOMContentLoaded", boot);

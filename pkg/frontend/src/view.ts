import type { QueueState } from "./queue";
import type { MetricsReport } from "./types";

function esc(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function pct(x: number): string {
  return (100 * x).toFixed(2) + "%";
}

export function renderFeatureRows(
  features: Record<string, number | string>,
  outOfRange: string[],
): string {
  const flagged = new Set(outOfRange);
  return Object.entries(features)
    .map(([name, value]) => {
      const drifted = flagged.has(name);
      const cls = drifted ? ' class="out-of-range"' : "";
      const badge = drifted ? ' <span class="badge">outside source range</span>' : "";
      const shown = typeof value === "number" ? value.toPrecision(6) : value;
      return `<tr${cls}><td>${esc(name)}</td><td>${esc(shown)}${badge}</td></tr>`;
    })
    .join("");
}

export function renderPrediction(proba: Record<string, number>, predicted: string): string {
  const rows = Object.entries(proba)
    .sort((a, b) => b[1] - a[1])
    .map(
      ([name, p]) =>
        `<div class="proba${name === predicted ? " top" : ""}">` +
        `<span>${esc(name)}</span><span>${pct(p)}</span></div>`,
    );
  return rows.join("");
}

export function renderLabelButtons(vocab: string[]): string {
  return vocab
    .map(
      (name, i) =>
        `<button class="label-btn" data-label="${esc(name)}">` +
        `<kbd>${i + 1}</kbd> ${esc(name)}</button>`,
    )
    .join("");
}

export function renderMetrics(metrics: MetricsReport | null): string {
  if (!metrics) return "<p>post-adaptation metrics not available yet</p>";
  const rows = metrics.classes
    .filter((c) => c in metrics.per_class_f1)
    .map((c) => `<tr><td>${esc(c)}</td><td>${pct(metrics.per_class_f1[c])}</td></tr>`)
    .join("");
  return (
    `<p>macro F1 <strong>${pct(metrics.macro_f1)}</strong>, ` +
    `accuracy ${pct(metrics.accuracy)}` +
    (metrics.fnr !== null ? `, FNR ${metrics.fnr.toFixed(4)}` : "") +
    (metrics.fpr !== null ? `, FPR ${metrics.fpr.toFixed(4)}` : "") +
    `</p><table><thead><tr><th>class</th><th>F1</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderState(state: QueueState): string {
  const status = state.runStatus;
  const header = status
    ? `<div class="stats">pending <strong>${status.pending}</strong> / ` +
      `labeled ${status.labeled + 0} of ${status.total} ` +
      `(you: ${state.labeledByMe})</div>`
    : "";
  switch (state.phase) {
    case "loading":
      return `<p class="banner">loading queue...</p>`;
    case "retrying":
      return (
        `<p class="banner warn">service unreachable, retrying... ` +
        `(no labels lost)</p>`
      );
    case "empty":
      return `${header}<p class="banner">run is not awaiting labels</p>`;
    case "resuming":
      return `${header}<p class="banner">all tasks labeled; run resuming...</p>`;
    case "failed":
      return `${header}<p class="banner error">run failed: ${esc(state.lastError)}</p>`;
    case "completed":
      return (
        `${header}<p class="banner ok">run completed</p>` +
        `<section class="metrics">${renderMetrics(state.metrics)}</section>`
      );
    case "labeling": {
      const view = state.current;
      if (!view) return `${header}<p class="banner">no task selected</p>`;
      const t = view.task;
      return (
        header +
        `<section class="task" data-task-id="${esc(t.task_id)}">` +
        `<h2>sample #${t.sample_index} <small>score ${t.score.toFixed(3)}</small></h2>` +
        `<p>model says <strong>${esc(t.predicted_label)}</strong></p>` +
        `<div class="proba-list">${renderPrediction(t.predicted_proba, t.predicted_label)}</div>` +
        `<table class="features"><tbody>${renderFeatureRows(t.features, view.outOfRange)}</tbody></table>` +
        `</section>`
      );
    }
  }
}

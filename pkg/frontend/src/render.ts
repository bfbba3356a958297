// HTML/SVG string templates. Pure functions of their inputs so they are
// testable without a DOM; main.ts assigns the results to innerHTML.

import type { IterationRecord, PendingItem, SegmentOutcome } from "./api.js";
import type { AnswerState, MetricSeries } from "./state.js";
import { controlsDisabled } from "./state.js";

const STRATEGIES = ["random", "lc", "margin", "entropy", "eer", "id", "bmu"];

function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

function yesNo(name: string, segmentId: string, value: boolean | null): string {
    const checked = (v: boolean) => (value === v ? "checked" : "");
    return `
      <label><input type="radio" name="${name}-${segmentId}" data-segment="${segmentId}"
        data-question="${name}" value="yes" ${checked(true)}> Yes</label>
      <label><input type="radio" name="${name}-${segmentId}" data-segment="${segmentId}"
        data-question="${name}" value="no" ${checked(false)}> No</label>`;
}

export function categoryBanner(category: string): string {
    return `<div class="banner">Category: <strong>${escapeHtml(category.toUpperCase())}</strong></div>`;
}

export function surveyCard(
    item: PendingItem,
    index: number,
    total: number,
    answer: AnswerState,
): string {
    const qs = item.question_set;
    return `
  <div class="card" data-card="${item.segment_id}">
    <div class="progress">Segment ${index + 1} of ${total}</div>
    <blockquote class="segment-text">${escapeHtml(item.text)}</blockquote>
    <fieldset>
      <legend>${escapeHtml(qs.q1)}</legend>
      ${yesNo("q1", item.segment_id, answer.q1)}
    </fieldset>
    <fieldset>
      <legend>${escapeHtml(qs.q2)}</legend>
      ${yesNo("q2", item.segment_id, answer.q2)}
    </fieldset>
    <fieldset>
      <legend>${escapeHtml(qs.honesty)}</legend>
      ${yesNo("honesty", item.segment_id, answer.honesty)}
    </fieldset>
  </div>`;
}

export function surveyList(items: PendingItem[], answers: Map<string, AnswerState>): string {
    return items
        .map((item, i) =>
            surveyCard(item, i, items.length, answers.get(item.segment_id) ?? {
                q1: null,
                q2: null,
                honesty: null,
            }),
        )
        .join("\n");
}

export function sparkline(values: number[], width = 220, height = 48): string {
    if (values.length === 0) {
        return `<svg class="spark" width="${width}" height="${height}"></svg>`;
    }
    const lo = Math.min(...values, 0);
    const hi = Math.max(...values, 1e-9);
    const span = hi - lo || 1;
    const step = values.length > 1 ? width / (values.length - 1) : 0;
    const points = values
        .map((v, i) => `${(i * step).toFixed(1)},${(height - ((v - lo) / span) * height).toFixed(1)}`)
        .join(" ");
    return `<svg class="spark" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">
      <polyline fill="none" stroke="currentColor" stroke-width="1.5" points="${points}"/></svg>`;
}

function metricBlock(label: string, values: number[]): string {
    const latest = values.length ? values[values.length - 1].toFixed(3) : "–";
    return `
    <div class="metric" data-metric="${label}">
      <div class="metric-head"><span>${label}</span><strong>${latest}</strong></div>
      ${sparkline(values)}
    </div>`;
}

export function dashboard(
    state: string,
    series: MetricSeries,
    config: { strategy: string; at: number },
): string {
    const disabled = controlsDisabled(state) ? "disabled" : "";
    const options = STRATEGIES.map(
        (s) => `<option value="${s}" ${s === config.strategy ? "selected" : ""}>${s}</option>`,
    ).join("");
    return `
  <div class="dashboard" data-state="${state}">
    ${metricBlock("f1", series.f1)}
    ${metricBlock("mcc", series.mcc)}
    ${metricBlock("nsr_train", series.nsr_train)}
    ${metricBlock("ar", series.ar)}
    <div class="steering">
      <label>Strategy
        <select id="strategy-select" ${disabled}>${options}</select>
      </label>
      <label>Acceptance threshold <span id="at-value">${config.at.toFixed(2)}</span>
        <input id="at-slider" type="range" min="0.55" max="1.0" step="0.05"
               value="${config.at}" ${disabled}>
      </label>
    </div>
  </div>`;
}

export function outcomeToast(outcomes: SegmentOutcome[]): string {
    const counts = new Map<string, number>();
    for (const o of outcomes) {
        counts.set(o.outcome, (counts.get(o.outcome) ?? 0) + 1);
    }
    const parts = [...counts.entries()].map(([k, v]) => `${v} ${k}`);
    return `<div class="toast">Consolidated: ${parts.join(", ")}</div>`;
}

export function trainingNotice(): string {
    return `<div class="notice">Training in progress, polling for the next batch…</div>`;
}

export function errorBanner(detail: string): string {
    return `<div class="error">Submission rejected: ${escapeHtml(detail)} (your answers are preserved)</div>`;
}

export function completionScreen(records: IterationRecord[]): string {
    const last = records[records.length - 1];
    const summary = last
        ? `final F1 ${last.f1.toFixed(3)}, MCC ${last.mcc.toFixed(3)} after ${last.iteration} iterations and ${last.le_spent} LE`
        : "no iterations recorded";
    return `<div class="done"><h2>Session finished</h2><p>${summary}</p></div>`;
}

// App wiring: one session per tab, polling while the server trains.

import { ApiError, SessionClient } from "./api.js";
import type { PendingItem } from "./api.js";
import {
    allAnswered,
    buildResponses,
    metricSeries,
    newAnswerSheet,
    type AnswerSheet,
} from "./state.js";
import {
    categoryBanner,
    completionScreen,
    dashboard,
    errorBanner,
    outcomeToast,
    surveyList,
    trainingNotice,
} from "./render.js";

const POLL_MS = 2000;

interface AppState {
    client: SessionClient;
    sessionId: string;
    category: string;
    items: PendingItem[];
    sheet: AnswerSheet;
    finished: boolean;
}

let app: AppState | null = null;

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

async function refreshDashboard(): Promise<void> {
    if (!app) return;
    const metrics = await app.client.fetchMetrics(app.sessionId);
    el("dashboard-root").innerHTML = dashboard(
        metrics.state,
        metricSeries(metrics.records),
        { strategy: metrics.config.strategy, at: metrics.config.at },
    );
    wireSteering();
    if (metrics.state === "finished") {
        app.finished = true;
        el("survey-root").innerHTML = completionScreen(metrics.records);
    }
}

function renderSurvey(): void {
    if (!app) return;
    el("banner-root").innerHTML = categoryBanner(app.category);
    el("survey-root").innerHTML = surveyList(app.items, app.sheet);
    updateSubmitGate();
}

function updateSubmitGate(): void {
    if (!app) return;
    el<HTMLButtonElement>("submit-button").disabled = !allAnswered(app.items, app.sheet);
}

function onAnswerChange(event: Event): void {
    if (!app) return;
    const input = event.target as HTMLInputElement;
    const segment = input.dataset.segment;
    const question = input.dataset.question as "q1" | "q2" | "honesty" | undefined;
    if (!segment || !question) return;
    const answer = app.sheet.get(segment);
    if (!answer) return;
    answer[question] = input.value === "yes";
    updateSubmitGate();
}

async function pollForBatch(): Promise<void> {
    if (!app || app.finished) return;
    try {
        const batch = await app.client.fetchBatch(app.sessionId);
        app.items = batch.items;
        app.sheet = newAnswerSheet(batch.items);
        renderSurvey();
    } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
            el("survey-root").innerHTML = trainingNotice();
            setTimeout(pollForBatch, POLL_MS);
            return;
        }
        throw err;
    }
}

async function submitSurvey(): Promise<void> {
    if (!app) return;
    const token = `submit-${app.sessionId}-${app.items[0]?.segment_id ?? "end"}`;
    try {
        const result = await app.client.submitLabels(
            app.sessionId,
            buildResponses(app.items, app.sheet),
            token,
        );
        el("toast-root").innerHTML = outcomeToast(result.outcomes);
        await refreshDashboard();
        if (result.state === "awaiting_labels") {
            app.items = result.pending;
            app.sheet = newAnswerSheet(result.pending);
            renderSurvey();
        } else if (!app.finished) {
            await pollForBatch();
        }
    } catch (err) {
        if (err instanceof ApiError) {
            // answers stay as entered; show the server's reason inline
            el("toast-root").innerHTML = errorBanner(err.detail);
            return;
        }
        throw err;
    }
}

function wireSteering(): void {
    if (!app) return;
    const select = document.getElementById("strategy-select") as HTMLSelectElement | null;
    const slider = document.getElementById("at-slider") as HTMLInputElement | null;
    select?.addEventListener("change", () => {
        void app?.client.updateConfig(app.sessionId, { strategy: select.value });
    });
    slider?.addEventListener("change", () => {
        void app?.client
            .updateConfig(app.sessionId, { at: Number(slider.value) })
            .then(refreshDashboard);
    });
}

async function startSession(): Promise<void> {
    const baseUrl = el<HTMLInputElement>("server-url").value.replace(/\/$/, "");
    const category = el<HTMLSelectElement>("category-select").value;
    const strategy = el<HTMLSelectElement>("start-strategy").value;
    const client = new SessionClient(baseUrl);
    const created = await client.createSession({
        category,
        strategy,
        request_token: `create-${Date.now()}`,
    });
    app = {
        client,
        sessionId: created.session_id,
        category,
        items: created.pending,
        sheet: newAnswerSheet(created.pending),
        finished: created.state === "finished",
    };
    el("setup-root").hidden = true;
    el("session-root").hidden = false;
    renderSurvey();
    await refreshDashboard();
}

export function init(): void {
    el("start-button").addEventListener("click", () => void startSession());
    el("survey-root").addEventListener("change", onAnswerChange);
    el("submit-button").addEventListener("click", () => void submitSurvey());
}

if (typeof document !== "undefined" && document.getElementById("start-button")) {
    init();
}

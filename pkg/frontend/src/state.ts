// Client-side session state: survey answers, submit gating, the
// one-human-to-five-workers response expansion, and dashboard series.
// Nothing here survives a refresh that the server does not also hold.

import type { IterationRecord, LabelResponse, PendingItem } from "./api.js";

export const WORKERS_PER_SEGMENT = 5;

export interface AnswerState {
    q1: boolean | null;
    q2: boolean | null;
    honesty: boolean | null;
}

export type AnswerSheet = Map<string, AnswerState>;

export function newAnswerSheet(items: PendingItem[]): AnswerSheet {
    return new Map(items.map((i) => [i.segment_id, { q1: null, q2: null, honesty: null }]));
}

export function answerComplete(a: AnswerState): boolean {
    return a.q1 !== null && a.q2 !== null && a.honesty !== null;
}

/** Submit is enabled only when all three answers are set for every item. */
export function allAnswered(items: PendingItem[], sheet: AnswerSheet): boolean {
    return items.every((i) => {
        const a = sheet.get(i.segment_id);
        return a !== undefined && answerComplete(a);
    });
}

/**
 * Expand one human's answers for one segment into the session's five worker
 * responses. Worker ids are scoped by labeling iteration so a republished
 * segment never sees a repeated worker id.
 */
export function multiplex(item: PendingItem, answer: AnswerState): LabelResponse[] {
    if (!answerComplete(answer)) {
        throw new Error(`answers incomplete for segment ${item.segment_id}`);
    }
    const responses: LabelResponse[] = [];
    for (let k = 0; k < WORKERS_PER_SEGMENT; k++) {
        responses.push({
            segment_id: item.segment_id,
            worker_id: `human-i${item.labeling_iteration}-w${k}`,
            q1_relevant: answer.q1 as boolean,
            q2_collect: answer.q2 as boolean,
            honesty_ok: answer.honesty as boolean,
        });
    }
    return responses;
}

/** Flat response list for POST /sessions/{id}/labels, in served order. */
export function buildResponses(items: PendingItem[], sheet: AnswerSheet): LabelResponse[] {
    const out: LabelResponse[] = [];
    for (const item of items) {
        const answer = sheet.get(item.segment_id);
        if (answer === undefined) {
            throw new Error(`no answers recorded for segment ${item.segment_id}`);
        }
        out.push(...multiplex(item, answer));
    }
    return out;
}

export interface MetricSeries {
    iterations: number[];
    f1: number[];
    mcc: number[];
    nsr_train: number[];
    ar: number[];
}

export function metricSeries(records: IterationRecord[]): MetricSeries {
    return {
        iterations: records.map((r) => r.iteration),
        f1: records.map((r) => r.f1),
        mcc: records.map((r) => r.mcc),
        nsr_train: records.map((r) => r.nsr_train),
        ar: records.map((r) => r.ar),
    };
}

/** Steering controls lock while the server is retraining. */
export function controlsDisabled(state: string): boolean {
    return state === "training";
}

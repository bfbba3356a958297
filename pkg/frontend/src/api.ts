// Typed client for the labeling service. Field names on the wire are fixed
// by the server contract: segment_id, worker_id, q1_relevant, q2_collect,
// honesty_ok.

export interface QuestionSet {
    q1: string;
    q2: string;
    honesty: string;
}

export interface PendingItem {
    segment_id: string;
    text: string;
    labeling_iteration: number;
    question_set: QuestionSet;
}

export interface LabelResponse {
    segment_id: string;
    worker_id: string;
    q1_relevant: boolean;
    q2_collect: boolean;
    honesty_ok: boolean;
}

export interface IterationRecord {
    iteration: number;
    le_spent: number;
    labels_aligned: number;
    nsr_train: number;
    nsr_pool: number;
    ar: number;
    accuracy: number;
    precision: number;
    recall: number;
    f1: number;
    mcc: number;
}

export interface SessionConfigBody {
    category?: string;
    strategy?: string;
    at?: number;
    relabel_mode?: string;
    bootstrap_labels?: number;
    al_batch_requested?: number;
    le_budget?: number;
    seed?: number;
    request_token?: string;
}

export interface CreateResult {
    session_id: string;
    state: string;
    pending: PendingItem[];
}

export interface SegmentOutcome {
    segment_id: string;
    outcome: string;
    ap: number;
}

export interface SubmitResult {
    state: string;
    outcomes: SegmentOutcome[];
    metrics: IterationRecord | null;
    pending: PendingItem[];
}

export interface MetricsResult {
    state: string;
    records: IterationRecord[];
    config: { category: string; strategy: string; at: number; relabel_mode: string };
    config_events: Array<Record<string, unknown>>;
    live: { labels_aligned: number; le_spent: number; nsr_pool: number };
}

export class ApiError extends Error {
    constructor(public status: number, public detail: string) {
        super(`HTTP ${status}: ${detail}`);
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class SessionClient {
    constructor(
        private baseUrl: string,
        private fetchImpl: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const resp = await this.fetchImpl(this.baseUrl + path, init);
        const body = await resp.json().catch(() => ({}));
        if (!resp.ok) {
            const detail = typeof body?.detail === "string" ? body.detail : resp.statusText;
            throw new ApiError(resp.status, detail);
        }
        return body as T;
    }

    private post<T>(path: string, payload: unknown): Promise<T> {
        return this.request<T>(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
        });
    }

    createSession(config: SessionConfigBody): Promise<CreateResult> {
        return this.post("/sessions", config);
    }

    fetchBatch(sessionId: string): Promise<{ state: string; items: PendingItem[] }> {
        return this.request(`/sessions/${sessionId}/batch`);
    }

    submitLabels(
        sessionId: string,
        responses: LabelResponse[],
        requestToken?: string,
    ): Promise<SubmitResult> {
        return this.post(`/sessions/${sessionId}/labels`, {
            responses,
            request_token: requestToken,
        });
    }

    fetchMetrics(sessionId: string): Promise<MetricsResult> {
        return this.request(`/sessions/${sessionId}/metrics`);
    }

    updateConfig(
        sessionId: string,
        patch: { strategy?: string; at?: number; request_token?: string },
    ): Promise<{ state: string; config: { strategy: string; at: number } }> {
        return this.request(`/sessions/${sessionId}/config`, {
            method: "PATCH",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(patch),
        });
    }
}

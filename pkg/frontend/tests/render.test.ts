import { describe, expect, it } from "vitest";

import type { IterationRecord, PendingItem } from "../src/api.js";
import {
    categoryBanner,
    completionScreen,
    dashboard,
    errorBanner,
    outcomeToast,
    sparkline,
    surveyCard,
    surveyList,
} from "../src/render.js";
import { metricSeries, newAnswerSheet } from "../src/state.js";

function item(id: string): PendingItem {
    return {
        segment_id: id,
        text: "We may collect your <gps> position",
        labeling_iteration: 1,
        question_set: {
            q1: "First party?",
            q2: "Does the segment claim to collect or use LOCATION information?",
            honesty: "Did you answer carefully?",
        },
    };
}

function record(iteration: number): IterationRecord {
    return {
        iteration,
        le_spent: 100 * iteration,
        labels_aligned: 30 * iteration,
        nsr_train: 0.25,
        nsr_pool: 0.1,
        ar: 0.72,
        accuracy: 0.9,
        precision: 0.91,
        recall: 0.88,
        f1: 0.893,
        mcc: 0.61,
    };
}

describe("surveyCard", () => {
    it("shows progress, escaped segment text, and all three questions", () => {
        const html = surveyCard(item("s1"), 1, 8, { q1: null, q2: null, honesty: null });
        expect(html).toContain("Segment 2 of 8");
        expect(html).toContain("&lt;gps&gt;");
        expect(html).toContain("LOCATION");
        expect(html).toContain("First party?");
        expect(html).toContain("Did you answer carefully?");
        // three questions, one yes and one no radio each
        expect(html.match(/type="radio"/g)).toHaveLength(6);
    });

    it("reflects recorded answers as checked inputs", () => {
        const html = surveyCard(item("s1"), 0, 1, { q1: true, q2: false, honesty: null });
        expect(html).toContain(`data-question="q1" value="yes" checked`);
        expect(html).toContain(`data-question="q2" value="no" checked`);
        expect(html).not.toContain(`data-question="honesty" value="yes" checked`);
    });
});

describe("surveyList", () => {
    it("renders one card per pending item in served order", () => {
        const items = [item("s1"), item("s2"), item("s3")];
        const html = surveyList(items, newAnswerSheet(items));
        const order = [...html.matchAll(/data-card="(s\d)"/g)].map((m) => m[1]);
        expect(order).toEqual(["s1", "s2", "s3"]);
    });
});

describe("dashboard", () => {
    const series = metricSeries([record(0), record(1), record(2)]);

    it("renders one block per tracked metric with its latest value", () => {
        const html = dashboard("awaiting_labels", series, { strategy: "lc", at: 0.8 });
        for (const metric of ["f1", "mcc", "nsr_train", "ar"]) {
            expect(html).toContain(`data-metric="${metric}"`);
        }
        expect(html).toContain("0.893");
        expect(html.match(/<polyline/g)).toHaveLength(4);
    });

    it("disables steering controls while training", () => {
        const html = dashboard("training", series, { strategy: "lc", at: 0.8 });
        expect(html).toContain(`<select id="strategy-select" disabled>`);
        expect(html).toContain("disabled>");
    });

    it("marks the active strategy selected", () => {
        const html = dashboard("awaiting_labels", series, { strategy: "bmu", at: 0.6 });
        expect(html).toContain(`<option value="bmu" selected>`);
        expect(html).toContain(`value="0.6"`);
    });
});

describe("sparkline", () => {
    it("draws a polyline through all points", () => {
        const svg = sparkline([0.1, 0.5, 0.9], 100, 40);
        const points = svg.match(/points="([^"]+)"/)![1].trim().split(" ");
        expect(points).toHaveLength(3);
    });

    it("handles empty series", () => {
        expect(sparkline([])).toContain("<svg");
    });
});

describe("toasts and screens", () => {
    it("summarizes consolidation outcomes", () => {
        const html = outcomeToast([
            { segment_id: "a", outcome: "positive", ap: 1.0 },
            { segment_id: "b", outcome: "positive", ap: 0.8 },
            { segment_id: "c", outcome: "unaligned", ap: 0.6 },
        ]);
        expect(html).toContain("2 positive");
        expect(html).toContain("1 unaligned");
    });

    it("preserves-answers message on rejection", () => {
        const html = errorBanner("each pending segment needs exactly 5 responses");
        expect(html).toContain("answers are preserved");
        expect(html).toContain("exactly 5 responses");
    });

    it("completion screen shows the final metrics", () => {
        const html = completionScreen([record(1), record(7)]);
        expect(html).toContain("Session finished");
        expect(html).toContain("0.893");
        expect(html).toContain("700 LE");
    });
});

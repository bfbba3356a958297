import itertools
from collections import Counter

import numpy as np
import pytest

from prival.oracle import (
    Answer,
    GroundTruth,
    LabelResponse,
    Outcome,
    RelabelMode,
    SimulatedOracle,
    UnalignedAction,
    WorkerProfile,
    agreement,
    alignment_rate,
    consolidate,
    handle_unaligned,
    make_worker_pool,
    read_truths_jsonl,
    simulate_responses,
    write_truths_jsonl,
)


def response(answer: Answer, worker="w", seg="s", honest=True) -> LabelResponse:
    return LabelResponse(
        worker_id=worker,
        segment_id=seg,
        q1_relevant=answer is not Answer.IRRELEVANT,
        q2_collect=answer is Answer.POSITIVE,
        honesty_ok=honest,
    )


def responses_of(answers, honest_flags=None):
    honest_flags = honest_flags or [True] * len(answers)
    return [
        response(a, worker=f"w{i}", honest=h)
        for i, (a, h) in enumerate(zip(answers, honest_flags))
    ]


def consolidation_oracle(answers, at):
    """Brute-force reference: count answers, resolve modal ties toward the
    loser precedence irrelevant < negative < positive, apply the threshold."""
    counts = Counter(answers)
    top = max(counts.values())
    precedence = {Answer.IRRELEVANT: 0, Answer.NEGATIVE: 1, Answer.POSITIVE: 2}
    modal = sorted((a for a, c in counts.items() if c == top), key=lambda a: precedence[a])[0]
    ap = top / len(answers)
    outcome = Outcome(modal.value) if ap >= at else Outcome.UNALIGNED
    return outcome, ap


class TestAgreement:
    def test_paper_style_example(self):
        answers = [Answer.POSITIVE] * 5 + [Answer.NEGATIVE] * 2 + [Answer.IRRELEVANT] * 3
        modal, ap = agreement(responses_of(answers))
        assert modal is Answer.POSITIVE
        assert ap == pytest.approx(0.5)

    def test_unanimous(self):
        modal, ap = agreement(responses_of([Answer.POSITIVE] * 5))
        assert modal is Answer.POSITIVE and ap == 1.0

    def test_four_to_one(self):
        modal, ap = agreement(responses_of([Answer.POSITIVE] * 4 + [Answer.NEGATIVE]))
        assert modal is Answer.POSITIVE and ap == pytest.approx(0.8)

    def test_dishonest_responses_dropped_from_denominator(self):
        answers = [Answer.POSITIVE] * 4 + [Answer.NEGATIVE]
        flags = [True, True, True, True, False]
        modal, ap = agreement(responses_of(answers, flags))
        assert modal is Answer.POSITIVE and ap == 1.0

    def test_all_dishonest_is_an_error(self):
        with pytest.raises(ValueError, match="no usable responses"):
            agreement(responses_of([Answer.POSITIVE] * 3, [False] * 3))

    def test_tie_goes_to_loser(self):
        modal, ap = agreement(
            responses_of([Answer.POSITIVE, Answer.POSITIVE, Answer.NEGATIVE, Answer.NEGATIVE])
        )
        assert modal is Answer.NEGATIVE
        assert ap == 0.5


class TestConsolidate:
    def test_aligns_at_exact_threshold(self):
        got = consolidate(responses_of([Answer.POSITIVE] * 4 + [Answer.NEGATIVE]), at=0.8)
        assert got.outcome is Outcome.POSITIVE and got.ap == pytest.approx(0.8)

    def test_unaligned_below_threshold(self):
        got = consolidate(
            responses_of([Answer.POSITIVE] * 3 + [Answer.NEGATIVE] * 2), at=0.8
        )
        assert got.outcome is Outcome.UNALIGNED
        assert got.ap == pytest.approx(0.6)

    def test_irrelevant_majority_is_irrelevant_outcome(self):
        got = consolidate(responses_of([Answer.IRRELEVANT] * 5), at=0.8)
        assert got.outcome is Outcome.IRRELEVANT

    def test_at_bounds_validated(self):
        rs = responses_of([Answer.POSITIVE] * 5)
        for bad in (0.5, 0.4, 1.2, 0.0):
            with pytest.raises(ValueError):
                consolidate(rs, at=bad)

    def test_enumeration_matches_bruteforce_oracle(self):
        for answers in itertools.product(list(Answer), repeat=5):
            rs = responses_of(answers)
            for at in (0.6, 0.8, 1.0):
                got = consolidate(rs, at)
                want_outcome, want_ap = consolidation_oracle(answers, at)
                assert got.outcome is want_outcome, (answers, at)
                assert got.ap == pytest.approx(want_ap)
                if got.outcome is Outcome.UNALIGNED:
                    assert got.ap < at
                else:
                    assert got.ap >= at


class TestWorkers:
    def test_pool_eligibility_and_competence_range(self):
        pool = make_worker_pool(100, seed=1)
        assert len(pool) == 100
        assert all(w.eligible for w in pool)
        assert all(0.8 <= w.competence <= 0.98 for w in pool)

    def test_competence_bounds_enforced(self):
        with pytest.raises(ValueError):
            WorkerProfile(id="w", competence=0.3)

    def test_ineligible_worker(self):
        w = WorkerProfile(id="w", competence=0.9, approval_rate=0.5)
        assert not w.eligible


class TestSimulateResponses:
    def workers(self, competence=1.0, n=5):
        return [WorkerProfile(id=f"w{i}", competence=competence) for i in range(n)]

    def test_noiseless_matches_truth(self):
        rs = simulate_responses("seg", Answer.POSITIVE, self.workers(), 0.0, seed=1)
        assert len(rs) == 5
        assert all(r.answer is Answer.POSITIVE for r in rs)
        _, ap = agreement(rs)
        assert ap == 1.0

    def test_noiseless_negative(self):
        rs = simulate_responses("seg", Answer.NEGATIVE, self.workers(), 0.0, seed=1)
        assert all(r.answer is Answer.NEGATIVE for r in rs)

    def test_full_ambiguity_unanimity_rate(self):
        # all relevant answers are coin flips: P(unanimous) = 2 * 0.5^5
        aligned = 0
        n = 3000
        for i in range(n):
            rs = simulate_responses(f"seg{i}", Answer.POSITIVE, self.workers(), 1.0, seed=2)
            out = consolidate(rs, at=1.0)
            aligned += out.outcome in (Outcome.POSITIVE, Outcome.NEGATIVE)
        assert aligned / n == pytest.approx(2 * 0.5**5, abs=0.02)

    def test_deterministic_by_seed(self):
        a = simulate_responses("seg", Answer.POSITIVE, self.workers(0.9), 0.3, seed=5)
        b = simulate_responses("seg", Answer.POSITIVE, self.workers(0.9), 0.3, seed=5)
        assert a == b

    def test_worker_count_enforced(self):
        with pytest.raises(ValueError, match="workers"):
            simulate_responses("seg", Answer.POSITIVE, self.workers(n=4), 0.0, seed=1)

    def test_distinct_workers_enforced(self):
        ws = self.workers()
        ws[1] = ws[0]
        with pytest.raises(ValueError, match="distinct"):
            simulate_responses("seg", Answer.POSITIVE, ws, 0.0, seed=1)

    def test_ineligible_worker_rejected(self):
        ws = self.workers()
        ws[0] = WorkerProfile(id="w0", competence=0.9, approval_rate=0.5)
        with pytest.raises(ValueError, match="eligib"):
            simulate_responses("seg", Answer.POSITIVE, ws, 0.0, seed=1)


class TestSimulatedOracle:
    def make(self, n_segments=20, seed=3, ambiguous=False):
        truths = {
            f"s{i:03d}": GroundTruth(truth=Answer.POSITIVE, ambiguous=ambiguous)
            for i in range(n_segments)
        }
        return SimulatedOracle(truths, seed=seed)

    def test_no_worker_repeats_across_iterations(self):
        oracle = self.make()
        seen = set()
        for iteration in (1, 2, 3):
            for r in oracle.respond("s000", iteration):
                assert r.worker_id not in seen
                seen.add(r.worker_id)

    def test_responses_independent_of_call_order(self):
        o1 = self.make(seed=9)
        o2 = self.make(seed=9)
        _ = o1.respond("s001", 1)
        _ = o1.respond("s002", 1)
        a = o1.respond("s003", 1)
        b = o2.respond("s003", 1)
        assert a == b

    def test_worker_pool_exhaustion(self):
        truths = {"s": GroundTruth(truth=Answer.POSITIVE)}
        oracle = SimulatedOracle(truths, seed=1, n_workers=12)
        oracle.respond("s", 1)
        oracle.respond("s", 2)
        with pytest.raises(RuntimeError, match="worker pool exhausted"):
            oracle.respond("s", 3)

    def test_perfect_workers_align_everything(self):
        truths = {f"s{i}": GroundTruth(truth=Answer.NEGATIVE) for i in range(30)}
        workers = [WorkerProfile(id=f"w{i}", competence=1.0) for i in range(50)]
        oracle = SimulatedOracle(truths, seed=2, workers=workers, honesty_rate=1.0)
        for sid in truths:
            out = consolidate(oracle.respond(sid, 1), at=1.0)
            assert out.outcome is Outcome.NEGATIVE


class TestHandleUnaligned:
    def test_label_and_discard(self):
        assert (
            handle_unaligned(RelabelMode.LABEL_AND_DISCARD, labeling_iteration=1)
            is UnalignedAction.DISCARD
        )

    def test_incremental_republshes_until_third(self):
        assert (
            handle_unaligned(RelabelMode.INCREMENTAL_RELABEL, labeling_iteration=1)
            is UnalignedAction.REPUBLISH
        )
        assert (
            handle_unaligned(RelabelMode.INCREMENTAL_RELABEL, labeling_iteration=2)
            is UnalignedAction.REPUBLISH
        )
        assert (
            handle_unaligned(RelabelMode.INCREMENTAL_RELABEL, labeling_iteration=3)
            is UnalignedAction.MARK_AMBIGUOUS
        )

    def test_irl_cumulative_alignment_arithmetic(self):
        # 3/2 split, then five more positives: 8/10 aligns at AT = 0.8
        first = responses_of([Answer.POSITIVE] * 3 + [Answer.NEGATIVE] * 2)
        assert consolidate(first, at=0.8).outcome is Outcome.UNALIGNED
        more = [
            response(Answer.POSITIVE, worker=f"x{i}") for i in range(5)
        ]
        combined = first + more
        got = consolidate(combined, at=0.8)
        assert got.outcome is Outcome.POSITIVE
        assert got.ap == pytest.approx(0.8)


class TestAlignmentRate:
    def outcome(self, kind: Outcome) -> "ConsolidatedLabel":
        from prival.oracle import ConsolidatedLabel

        return ConsolidatedLabel(segment_id="s", outcome=kind, ap=1.0, n_responses=5)

    def test_ratio(self):
        outcomes = [self.outcome(Outcome.POSITIVE)] * 22 + [self.outcome(Outcome.UNALIGNED)] * 8
        assert alignment_rate(outcomes) == pytest.approx(22 / 30)

    def test_all_aligned(self):
        assert alignment_rate([self.outcome(Outcome.NEGATIVE)] * 4) == 1.0

    def test_irrelevant_not_counted_as_aligned(self):
        assert alignment_rate([self.outcome(Outcome.IRRELEVANT)] * 5) == 0.0

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            alignment_rate([])


def test_hit_batches_jsonl_round_trip(tmp_path):
    from prival.oracle import HitBatch, read_hit_batches_jsonl, write_hit_batches_jsonl

    batch = HitBatch(
        batch_id="hit0000",
        segment_ids=["a", "b"],
        responses={
            "a": responses_of([Answer.POSITIVE] * 5),
            "b": responses_of([Answer.NEGATIVE] * 5),
        },
        labeling_iteration=1,
    )
    path = tmp_path / "hits.jsonl"
    write_hit_batches_jsonl([batch], path)
    loaded = read_hit_batches_jsonl(path)
    assert loaded == [batch]


def test_truths_jsonl_round_trip(tmp_path):
    truths = {
        "a": GroundTruth(truth=Answer.POSITIVE, ambiguous=False),
        "b": GroundTruth(truth=Answer.IRRELEVANT, ambiguous=True),
    }
    path = tmp_path / "truths.jsonl"
    write_truths_jsonl(truths, path)
    assert read_truths_jsonl(path) == truths


def test_default_calibration_alignment_band():
    """Default worker distribution at low ambiguity lands in the reported
    alignment-rate band at the default threshold."""
    rng = np.random.default_rng(17)
    truths = {
        f"s{i:04d}": GroundTruth(
            truth=Answer.POSITIVE if rng.random() > 0.3 else Answer.NEGATIVE,
            ambiguous=bool(rng.random() < 0.1),
        )
        for i in range(500)
    }
    oracle = SimulatedOracle(truths, seed=23)
    outcomes = [consolidate(oracle.respond(sid, 1), at=0.8) for sid in truths]
    ar = alignment_rate(outcomes)
    assert 0.60 <= ar <= 0.85

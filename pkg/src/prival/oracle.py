"""The query oracle: multi-worker responses per segment (simulated here, or
supplied by humans through the service), agreement measurement, consolidation
under an acceptance threshold, and the unaligned-segment relabeling policy."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

WORKERS_PER_SEGMENT = 5
MAX_LABELING_ITERATIONS = 3
DEFAULT_HONESTY_RATE = 0.9963
DEFAULT_COMPETENCE_RANGE = (0.8, 0.98)
MIN_APPROVAL_RATE = 0.85
MIN_HITS_APPROVED = 50


class Answer(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    IRRELEVANT = "irrelevant"


class Outcome(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    IRRELEVANT = "irrelevant"
    UNALIGNED = "unaligned"


class RelabelMode(str, Enum):
    LABEL_AND_DISCARD = "label_and_discard"
    INCREMENTAL_RELABEL = "incremental_relabel"


class UnalignedAction(Enum):
    DISCARD = "discard"
    REPUBLISH = "republish"
    MARK_AMBIGUOUS = "mark_ambiguous"


# Tie losers ranked lowest: a modal tie resolves toward the least-acceptable
# answer (it can never align anyway, since a tie caps AP at 0.5).
_TIE_PRECEDENCE = {Answer.IRRELEVANT: 0, Answer.NEGATIVE: 1, Answer.POSITIVE: 2}


@dataclass
class WorkerProfile:
    id: str
    competence: float
    approval_rate: float = 0.9
    hits_approved: int = 100

    def __post_init__(self) -> None:
        if not 0.5 <= self.competence <= 1.0:
            raise ValueError("competence must lie in [0.5, 1]")

    @property
    def eligible(self) -> bool:
        return self.approval_rate > MIN_APPROVAL_RATE and self.hits_approved > MIN_HITS_APPROVED


@dataclass
class LabelResponse:
    worker_id: str
    segment_id: str
    q1_relevant: bool
    q2_collect: bool  # meaningful only when q1_relevant
    honesty_ok: bool

    @property
    def answer(self) -> Answer:
        if not self.q1_relevant:
            return Answer.IRRELEVANT
        return Answer.POSITIVE if self.q2_collect else Answer.NEGATIVE


@dataclass
class ConsolidatedLabel:
    segment_id: str
    outcome: Outcome
    ap: float
    n_responses: int


@dataclass
class HitBatch:
    batch_id: str
    segment_ids: list[str]
    responses: dict[str, list[LabelResponse]]
    labeling_iteration: int


@dataclass
class GroundTruth:
    truth: Answer
    ambiguous: bool = False


def make_worker_pool(
    n: int,
    seed: int,
    competence_range: tuple[float, float] = DEFAULT_COMPETENCE_RANGE,
) -> list[WorkerProfile]:
    """Eligible workers with competences drawn uniformly from the given range."""
    rng = np.random.default_rng([seed, 0x30CA])
    low, high = competence_range
    return [
        WorkerProfile(id=f"w{i:04d}", competence=float(c))
        for i, c in enumerate(rng.uniform(low, high, size=n))
    ]


def agreement(responses: list[LabelResponse]) -> tuple[Answer, float]:
    """Modal answer and agreement percentage after dropping dishonest responses."""
    usable = [r for r in responses if r.honesty_ok]
    if not usable:
        raise ValueError("no usable responses")
    counts = Counter(r.answer for r in usable)
    top = max(counts.values())
    tied = [a for a, c in counts.items() if c == top]
    modal = min(tied, key=lambda a: _TIE_PRECEDENCE[a])
    return modal, top / len(usable)


def consolidate(responses: list[LabelResponse], at: float) -> ConsolidatedLabel:
    """Apply the acceptance threshold to the agreement result."""
    if not 0.5 < at <= 1.0:
        raise ValueError("acceptance threshold must lie in (0.5, 1.0]")
    modal, ap = agreement(responses)
    usable = sum(1 for r in responses if r.honesty_ok)
    segment_id = responses[0].segment_id
    outcome = Outcome(modal.value) if ap >= at else Outcome.UNALIGNED
    return ConsolidatedLabel(segment_id=segment_id, outcome=outcome, ap=ap, n_responses=usable)


def _id_digest(segment_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(segment_id.encode(), digest_size=8).digest(), "big")


def simulate_responses(
    segment_id: str,
    truth: Answer,
    workers: list[WorkerProfile],
    ambiguity: float,
    seed: int,
    ambiguous: bool | None = None,
    honesty_rate: float = DEFAULT_HONESTY_RATE,
) -> list[LabelResponse]:
    """Simulate one labeling pass of five workers over a segment.

    The segment is ambiguous either by explicit flag or by a seeded draw at
    the given rate; on an ambiguous segment the collect/use answer is a fair
    coin.  Relevance and (when unambiguous) collect/use are answered correctly
    with each worker's competence.
    """
    if len(workers) != WORKERS_PER_SEGMENT:
        raise ValueError(f"exactly {WORKERS_PER_SEGMENT} workers required")
    if len({w.id for w in workers}) != WORKERS_PER_SEGMENT:
        raise ValueError("workers must be distinct")
    if not all(w.eligible for w in workers):
        raise ValueError("all workers must satisfy the eligibility requirements")

    rng = np.random.default_rng([seed, _id_digest(segment_id)])
    if ambiguous is None:
        ambiguous = bool(rng.random() < ambiguity)

    truly_relevant = truth in (Answer.POSITIVE, Answer.NEGATIVE)
    responses = []
    for w in workers:
        honesty_ok = bool(rng.random() < honesty_rate)
        q1_correct = bool(rng.random() < w.competence)
        q1_relevant = q1_correct if truly_relevant else not q1_correct
        q2_collect = False
        if q1_relevant:
            if ambiguous or not truly_relevant:
                q2_collect = bool(rng.random() < 0.5)
            else:
                q2_correct = bool(rng.random() < w.competence)
                q2_collect = q2_correct if truth == Answer.POSITIVE else not q2_correct
        responses.append(
            LabelResponse(
                worker_id=w.id,
                segment_id=segment_id,
                q1_relevant=q1_relevant,
                q2_collect=q2_collect,
                honesty_ok=honesty_ok,
            )
        )
    return responses


class SimulatedOracle:
    """Deterministic stand-in for a crowd marketplace.

    Responses for a (segment, labeling iteration) pair depend only on the
    oracle seed, the ground truths, and the worker pool, never on call order;
    each segment sees a fixed worker permutation sliced five at a time, so no
    worker ever answers the same segment twice.
    """

    def __init__(
        self,
        truths: dict[str, GroundTruth],
        seed: int,
        workers: list[WorkerProfile] | None = None,
        n_workers: int = 200,
        honesty_rate: float = DEFAULT_HONESTY_RATE,
    ):
        self.truths = truths
        self.seed = seed
        self.honesty_rate = honesty_rate
        self.workers = workers if workers is not None else make_worker_pool(n_workers, seed)
        self._eligible = [w for w in self.workers if w.eligible]

    def workers_for(self, segment_id: str, labeling_iteration: int) -> list[WorkerProfile]:
        if labeling_iteration < 1:
            raise ValueError("labeling_iteration starts at 1")
        end = WORKERS_PER_SEGMENT * labeling_iteration
        if end > len(self._eligible):
            raise RuntimeError("worker pool exhausted")
        rng = np.random.default_rng([self.seed, _id_digest(segment_id), 0x3A])
        perm = rng.permutation(len(self._eligible))
        return [self._eligible[i] for i in perm[end - WORKERS_PER_SEGMENT : end]]

    def respond(self, segment_id: str, labeling_iteration: int) -> list[LabelResponse]:
        truth = self.truths[segment_id]
        return simulate_responses(
            segment_id,
            truth.truth,
            self.workers_for(segment_id, labeling_iteration),
            ambiguity=0.0,
            seed=_mix(self.seed, labeling_iteration),
            ambiguous=truth.ambiguous,
            honesty_rate=self.honesty_rate,
        )


def _mix(seed: int, labeling_iteration: int) -> int:
    return seed * 1000003 + labeling_iteration


def handle_unaligned(
    mode: RelabelMode,
    labeling_iteration: int,
    max_iterations: int = MAX_LABELING_ITERATIONS,
) -> UnalignedAction:
    """Post-consolidation policy for a segment whose latest result is unaligned."""
    if mode == RelabelMode.LABEL_AND_DISCARD:
        return UnalignedAction.DISCARD
    if labeling_iteration < max_iterations:
        return UnalignedAction.REPUBLISH
    return UnalignedAction.MARK_AMBIGUOUS


def alignment_rate(outcomes: list[ConsolidatedLabel]) -> float:
    if not outcomes:
        raise ValueError("no published segments")
    aligned = sum(1 for o in outcomes if o.outcome in (Outcome.POSITIVE, Outcome.NEGATIVE))
    return aligned / len(outcomes)


def write_hit_batches_jsonl(batches: list[HitBatch], path) -> None:
    """Persist the publication ledger: one batch per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for batch in batches:
            fh.write(
                json.dumps(
                    {
                        "batch_id": batch.batch_id,
                        "segment_ids": batch.segment_ids,
                        "labeling_iteration": batch.labeling_iteration,
                        "responses": {
                            sid: [
                                {
                                    "worker_id": r.worker_id,
                                    "segment_id": r.segment_id,
                                    "q1_relevant": r.q1_relevant,
                                    "q2_collect": r.q2_collect,
                                    "honesty_ok": r.honesty_ok,
                                }
                                for r in rs
                            ]
                            for sid, rs in batch.responses.items()
                        },
                    }
                )
                + "\n"
            )


def read_hit_batches_jsonl(path) -> list[HitBatch]:
    batches = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            batches.append(
                HitBatch(
                    batch_id=obj["batch_id"],
                    segment_ids=obj["segment_ids"],
                    labeling_iteration=obj["labeling_iteration"],
                    responses={
                        sid: [LabelResponse(**r) for r in rs]
                        for sid, rs in obj["responses"].items()
                    },
                )
            )
    return batches


def write_truths_jsonl(truths: dict[str, GroundTruth], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for segment_id, gt in truths.items():
            fh.write(
                json.dumps(
                    {"segment_id": segment_id, "truth": gt.truth.value, "ambiguous": gt.ambiguous}
                )
                + "\n"
            )


def read_truths_jsonl(path) -> dict[str, GroundTruth]:
    truths: dict[str, GroundTruth] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            truths[obj["segment_id"]] = GroundTruth(
                truth=Answer(obj["truth"]), ambiguous=bool(obj["ambiguous"])
            )
    return truths

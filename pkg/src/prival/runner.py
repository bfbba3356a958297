"""Active-learning experiment orchestration.

Owns the session state machine shared by the in-process runner and the HTTP
labeling service: bootstrap on simulated labels, then iterate select ->
publish -> consolidate -> retrain while recording per-iteration metrics.
Also provides the synthetic corpus generator, NSR/TEP/percentile statistics,
and corpus-similarity measurement.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import classifier, strategies, transport
from .classifier import ClassifierModel, TrainConfig
from .embedding import WordEmbedding, nbow, tokenize
from .oracle import (
    WORKERS_PER_SEGMENT,
    Answer,
    ConsolidatedLabel,
    GroundTruth,
    HitBatch,
    LabelResponse,
    Outcome,
    RelabelMode,
    SimulatedOracle,
    UnalignedAction,
    consolidate,
    handle_unaligned,
)
from .segmenter import Category, Segment, SegmentStatus
from .strategies import SelectionRequest, StrategyKind

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "iteration",
    "le_spent",
    "labels_aligned",
    "nsr_train",
    "nsr_pool",
    "ar",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "mcc",
)


class PoolExhausted(RuntimeError):
    """Raised when the unlabeled pool empties before the bootstrap target."""

    def __init__(self, records: list["IterationRecord"]):
        super().__init__("pool exhausted during bootstrap")
        self.records = records


@dataclass
class MetricGoals:
    mcc_min: float = 0.2
    f1_min: float = 0.70


@dataclass
class ExperimentConfig:
    category: Category = Category.CONTACT
    strategy: StrategyKind = StrategyKind.RANDOM
    at: float = 0.8
    relabel_mode: RelabelMode = RelabelMode.LABEL_AND_DISCARD
    bootstrap_labels: int = 100
    al_batch_requested: int = 30
    expected_ar: float = 0.73
    bootstrap_train: TrainConfig = field(
        default_factory=lambda: TrainConfig(batch_size=20, learning_rate=0.1)
    )
    al_train: TrainConfig = field(
        default_factory=lambda: TrainConfig(batch_size=8, learning_rate=0.1)
    )
    le_budget: int = 8000
    stop_goals: MetricGoals | None = None
    eer_subsample: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.5 < self.at <= 1.0:
            raise ValueError("at must exceed 0.5 and not exceed 1.0")
        if self.le_budget <= 0 or self.bootstrap_labels <= 0 or self.al_batch_requested <= 0:
            raise ValueError("budgets and batch sizes must be positive")

    @property
    def al_batch_published(self) -> int:
        """Segments to publish per iteration in label-and-discard mode,
        inflated by the planning alignment rate."""
        return math.ceil(self.al_batch_requested / self.expected_ar)


@dataclass
class IterationRecord:
    iteration: int
    le_spent: int
    labels_aligned: int
    nsr_train: float
    nsr_pool: float
    ar: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any printable parts (independent of hash randomization)."""
    digest = hashlib.blake2b("|".join(str(p) for p in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def nsr(labels) -> float:
    """Negative sample ratio of a list of positive/negative labels."""
    if len(labels) == 0:
        raise ValueError("label list must be non-empty")
    values = [lbl.value if isinstance(lbl, Answer) else str(lbl) for lbl in labels]
    return sum(1 for v in values if v == "negative") / len(values)


# --- synthetic corpus -------------------------------------------------------

_OBJECTS = {
    Category.CONTACT: ("email address", "phone number", "contact book", "name"),
    Category.LOCATION: ("location", "gps position", "latitude and longitude", "city"),
    Category.DEVICE: ("device identifier", "ip address", "advertising id", "imei"),
}
_VERBS = ("collect", "store", "use", "share", "process", "access")
_TAILS = (
    "",
    "to improve our services",
    "to provide the service",
    "for account settings",
    "when you use the app",
    "for analytics",
)
_POSITIVE_TEMPLATES = (
    "we {verb} your {obj} {tail}",
    "our app may {verb} your {obj} {tail}",
    "the service will {verb} your {obj} {tail}",
    "we also {verb} your {obj} {tail}",
)
_NEGATIVE_TEMPLATES = (
    "we do not {verb} your {obj}",
    "we never {verb} your {obj} {tail}",
    "our app does not {verb} your {obj}",
    "we will not {verb} or share your {obj}",
)
_IRRELEVANT_TEMPLATES = (
    "our team loves building great products",
    "read our blog for news and updates",
    "contact our support team for help",
    "visit the website to read the terms and conditions",
    "you can change your settings at any time",
)


def _render(rng: np.random.Generator, truth: Answer, category: Category) -> str:
    if truth == Answer.IRRELEVANT:
        return _IRRELEVANT_TEMPLATES[rng.integers(len(_IRRELEVANT_TEMPLATES))]
    templates = _POSITIVE_TEMPLATES if truth == Answer.POSITIVE else _NEGATIVE_TEMPLATES
    text = templates[rng.integers(len(templates))].format(
        verb=_VERBS[rng.integers(len(_VERBS))],
        obj=_OBJECTS[category][rng.integers(len(_OBJECTS[category]))],
        tail=_TAILS[rng.integers(len(_TAILS))],
    )
    return " ".join(text.split())


def generate_synthetic_corpus(
    n_segments: int,
    nsr_target: float,
    ambiguity: float,
    category: Category,
    seed: int,
    irrelevant_rate: float = 0.10,
) -> tuple[list[Segment], dict[str, GroundTruth]]:
    """Templated segments with hidden truths.

    Negatives make up round(n * nsr_target) of the corpus; a further
    irrelevant_rate fraction are off-topic fillers; per-segment ambiguity
    flags are drawn at the given rate.  Deterministic by seed.
    """
    if not 0 < nsr_target < 1:
        raise ValueError("nsr_target must lie in (0, 1)")
    n_neg = round(n_segments * nsr_target)
    n_irr = round(n_segments * irrelevant_rate)
    n_pos = n_segments - n_neg - n_irr
    if n_pos < 0:
        raise ValueError("nsr_target and irrelevant_rate leave no positive segments")

    rng = np.random.default_rng([seed, 0xC0])
    truth_values = (
        [Answer.POSITIVE] * n_pos + [Answer.NEGATIVE] * n_neg + [Answer.IRRELEVANT] * n_irr
    )
    order = rng.permutation(n_segments)

    segments: list[Segment] = []
    truths: dict[str, GroundTruth] = {}
    for i in range(n_segments):
        truth = truth_values[order[i]]
        seg_id = f"syn{i:05d}"
        segments.append(
            Segment(
                id=seg_id,
                policy_id=f"synpol{i // 10:04d}",
                category=category,
                span_start=0,
                span_end=0,
                text=_render(rng, truth, category),
            )
        )
        truths[seg_id] = GroundTruth(truth=truth, ambiguous=bool(rng.random() < ambiguity))
    return segments, truths


def make_test_set(
    n: int, category: Category, emb: WordEmbedding, seed: int
) -> list[tuple[np.ndarray, int]]:
    """Balanced positive/negative feature-label pairs from the same templates."""
    segments, truths = generate_synthetic_corpus(
        2 * n, 0.5, 0.0, category, seed, irrelevant_rate=0.0
    )
    out = []
    for seg in segments[:n]:
        label = 1 if truths[seg.id].truth == Answer.POSITIVE else 0
        out.append((classifier.featurize(seg, emb), label))
    return out


# --- session state machine --------------------------------------------------


@dataclass
class _SegmentState:
    segment: Segment
    feature: np.ndarray
    responses: list[LabelResponse] = field(default_factory=list)
    labeling_iteration: int = 0  # completed labeling passes


class ActiveLearningSession:
    """One experiment's evolving state.

    The caller alternates pending_batch() -> submit_responses() until
    finished; where the responses come from (simulated oracle or humans over
    HTTP) does not affect the trajectory.
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        segments: list[Segment],
        emb: WordEmbedding,
        test_set: list[tuple[np.ndarray, int]],
        oracle: SimulatedOracle,
    ):
        self.cfg = cfg
        self.emb = emb
        self.test_set = test_set
        self.oracle = oracle

        self.states: dict[str, _SegmentState] = {}
        self.skipped_oov = 0
        for seg in segments:
            try:
                feature = classifier.featurize(seg, emb)
            except ValueError:
                self.skipped_oov += 1
                continue
            self.states[seg.id] = _SegmentState(segment=seg, feature=feature)
        if self.skipped_oov:
            logger.warning("excluded %d all-OOV segments from the pool", self.skipped_oov)

        self.available: list[str] = list(self.states)  # status unlabeled, selectable
        self.labeled_ids: list[str] = []
        self.labeled_features: list[np.ndarray] = []
        self.labeled_labels: list[int] = []
        self.republish_queue: list[str] = []
        self.records: list[IterationRecord] = []
        self.hit_batches: list[HitBatch] = []
        self.le_spent = 0
        self.iteration = 0
        self.model: ClassifierModel | None = None
        self.phase = "bootstrap"
        self.finished = False
        self.pending: list[str] = []
        self.config_events: list[dict] = []

        self._bootstrap_published = 0
        self._bootstrap_aligned = 0
        self._publish_bootstrap_chunk()

    # -- publication planning

    def _remaining_publishable(self) -> int:
        return (self.cfg.le_budget - self.le_spent) // WORKERS_PER_SEGMENT

    def _publish(self, ids: list[str]) -> None:
        for seg_id in ids:
            self.states[seg_id].segment.status = SegmentStatus.PUBLISHED
        self.pending = ids
        self.le_spent += WORKERS_PER_SEGMENT * len(ids)

    def _publish_bootstrap_chunk(self) -> None:
        need = self.cfg.bootstrap_labels - self._bootstrap_aligned
        if need <= 0:
            self._finish_bootstrap()
            return
        allowed = self._remaining_publishable()
        if allowed == 0:
            self._finish_bootstrap()  # budget gate: stop with whatever aligned so far
            return
        if not self.available:
            raise PoolExhausted(self.records)
        count = min(math.ceil(need / self.cfg.expected_ar), allowed, len(self.available))
        rng = np.random.default_rng(derive_seed(self.cfg.seed, "bootstrap", self._bootstrap_published))
        picks = rng.choice(len(self.available), size=count, replace=False)
        chosen = [self.available[i] for i in sorted(picks)]
        for seg_id in chosen:
            self.available.remove(seg_id)
        self._bootstrap_published += count
        self._publish(chosen)

    def _finish_bootstrap(self) -> None:
        self.phase = "active"
        self.pending = []
        if not self.labeled_labels:
            self.finished = True
            return
        self._retrain(self.cfg.bootstrap_train, derive_seed(self.cfg.seed, "boot-train"))
        self._append_record(
            ar=(self._bootstrap_aligned / self._bootstrap_published)
            if self._bootstrap_published
            else 0.0
        )
        if self._goals_met():
            self.finished = True
            return
        self._prepare_next_selection()

    def _prepare_next_selection(self) -> None:
        allowed = self._remaining_publishable()
        if allowed == 0:
            self.finished = True
            return
        to_publish: list[str] = []
        if self.cfg.relabel_mode == RelabelMode.INCREMENTAL_RELABEL:
            take = min(len(self.republish_queue), allowed)
            to_publish.extend(self.republish_queue[:take])
            self.republish_queue = self.republish_queue[take:]
            fresh_target = self.cfg.al_batch_requested
        else:
            fresh_target = self.cfg.al_batch_published
        fresh_allowed = min(fresh_target, allowed - len(to_publish), len(self.available))
        if fresh_allowed > 0:
            chosen = self._select(fresh_allowed)
            for seg_id in chosen:
                self.available.remove(seg_id)
            to_publish.extend(chosen)
        if not to_publish:
            self.finished = True
            return
        self.iteration += 1
        self._publish(to_publish)

    def _select(self, k: int) -> list[str]:
        features = np.vstack([self.states[i].feature for i in self.available])
        req = SelectionRequest(
            k=k,
            ids=list(self.available),
            features=features,
            model=self.model,
            seed=derive_seed(self.cfg.seed, "select", self.iteration),
            labeled_features=np.vstack(self.labeled_features)
            if self.labeled_features
            else np.zeros((0, self.emb.dim)),
            labeled_labels=np.array(self.labeled_labels) if self.labeled_labels else None,
            train_cfg=self.cfg.al_train,
            eer_subsample=self.cfg.eer_subsample,
        )
        return strategies.select(self.cfg.strategy, req)

    # -- response processing

    def pending_batch(self) -> list[dict]:
        """Pending segments with their upcoming labeling iteration (1-based)."""
        return [
            {
                "segment_id": seg_id,
                "text": self.states[seg_id].segment.text,
                "labeling_iteration": self.states[seg_id].labeling_iteration + 1,
            }
            for seg_id in self.pending
        ]

    def submit_responses(
        self, responses: dict[str, list[LabelResponse]]
    ) -> list[ConsolidatedLabel]:
        """Consolidate one publication round and advance the state machine."""
        if self.finished:
            raise RuntimeError("session is finished")
        missing = [i for i in self.pending if i not in responses]
        extra = [i for i in responses if i not in self.pending]
        if missing or extra:
            raise ValueError(f"responses must cover the pending batch exactly; missing={missing} unknown={extra}")

        outcomes: list[ConsolidatedLabel] = []
        for seg_id in self.pending:
            state = self.states[seg_id]
            state.responses.extend(responses[seg_id])
            state.labeling_iteration += 1
            outcomes.append(consolidate(state.responses, self.cfg.at))
        self.hit_batches.append(
            HitBatch(
                batch_id=f"hit{len(self.hit_batches):04d}",
                segment_ids=list(self.pending),
                responses={sid: list(responses[sid]) for sid in self.pending},
                labeling_iteration=max(
                    self.states[sid].labeling_iteration for sid in self.pending
                ),
            )
        )

        published = len(self.pending)
        aligned = 0
        for outcome in outcomes:
            state = self.states[outcome.segment_id]
            seg = state.segment
            if outcome.outcome in (Outcome.POSITIVE, Outcome.NEGATIVE):
                seg.status = SegmentStatus.ALIGNED
                seg.label = outcome.outcome.value
                self.labeled_ids.append(seg.id)
                self.labeled_features.append(state.feature)
                self.labeled_labels.append(1 if outcome.outcome == Outcome.POSITIVE else 0)
                aligned += 1
            elif outcome.outcome == Outcome.IRRELEVANT:
                seg.status = SegmentStatus.IRRELEVANT
            else:  # unaligned
                if self.phase == "bootstrap":
                    seg.status = SegmentStatus.DISCARDED
                    continue
                action = handle_unaligned(self.cfg.relabel_mode, state.labeling_iteration)
                if action == UnalignedAction.DISCARD:
                    seg.status = SegmentStatus.DISCARDED
                elif action == UnalignedAction.MARK_AMBIGUOUS:
                    seg.status = SegmentStatus.AMBIGUOUS
                else:
                    self.republish_queue.append(seg.id)

        self.pending = []
        if self.phase == "bootstrap":
            self._bootstrap_aligned += aligned
            self._publish_bootstrap_chunk()
            return outcomes

        self._retrain(self.cfg.al_train, derive_seed(self.cfg.seed, "al-train", self.iteration))
        self._append_record(ar=aligned / published if published else 0.0)
        if self._goals_met():
            self.finished = True
        else:
            self._prepare_next_selection()
        return outcomes

    # -- training and metrics

    def _retrain(self, cfg: TrainConfig, seed: int) -> None:
        data = list(zip(self.labeled_features, self.labeled_labels))
        self.model = classifier.train(data, cfg, seed)

    def _goals_met(self) -> bool:
        goals = self.cfg.stop_goals
        if goals is None or not self.records:
            return False
        last = self.records[-1]
        return last.mcc > goals.mcc_min and last.f1 > goals.f1_min

    def pool_nsr(self) -> float:
        pos = neg = 0
        for seg_id in self.available:
            truth = self.oracle.truths.get(seg_id)
            if truth is None:
                return float("nan")
            if truth.truth == Answer.POSITIVE:
                pos += 1
            elif truth.truth == Answer.NEGATIVE:
                neg += 1
        total = pos + neg
        return neg / total if total else 0.0

    def _append_record(self, ar: float) -> None:
        result = classifier.evaluate(self.model, self.test_set)
        n_neg = sum(1 for lbl in self.labeled_labels if lbl == 0)
        self.records.append(
            IterationRecord(
                iteration=self.iteration,
                le_spent=self.le_spent,
                labels_aligned=len(self.labeled_labels),
                nsr_train=n_neg / len(self.labeled_labels),
                nsr_pool=self.pool_nsr(),
                ar=ar,
                accuracy=result.accuracy,
                precision=result.precision,
                recall=result.recall,
                f1=result.f1,
                mcc=result.mcc,
            )
        )

    # -- live steering (service)

    def update_config(self, strategy: StrategyKind | None = None, at: float | None = None) -> None:
        """Steering for subsequent iterations; recorded in config_events."""
        changes: dict = {}
        if strategy is not None:
            changes["strategy"] = strategy
        if at is not None:
            if not 0.5 < at <= 1.0:
                raise ValueError("at must exceed 0.5 and not exceed 1.0")
            changes["at"] = at
        if changes:
            self.cfg = replace(self.cfg, **changes)
            self.config_events.append(
                {"iteration": self.iteration, **{k: getattr(v, "value", v) for k, v in changes.items()}}
            )


def run_experiment_session(
    cfg: ExperimentConfig,
    segments: list[Segment],
    oracle: SimulatedOracle,
    test_set: list[tuple[np.ndarray, int]],
    emb: WordEmbedding,
) -> ActiveLearningSession:
    """Drive a full experiment against a simulated oracle; returns the
    finished session (records, hit-batch ledger, final pool state)."""
    session = ActiveLearningSession(cfg, segments, emb, test_set, oracle)
    while not session.finished:
        responses = {
            item["segment_id"]: oracle.respond(item["segment_id"], item["labeling_iteration"])
            for item in session.pending_batch()
        }
        session.submit_responses(responses)
    return session


def run_experiment(
    cfg: ExperimentConfig,
    segments: list[Segment],
    oracle: SimulatedOracle,
    test_set: list[tuple[np.ndarray, int]],
    emb: WordEmbedding,
) -> list[IterationRecord]:
    return run_experiment_session(cfg, segments, oracle, test_set, emb).records


# --- derived statistics -----------------------------------------------------


def tep(
    curve_al: list[IterationRecord],
    curve_base: list[IterationRecord],
    target_value: float,
    metric: str,
) -> float:
    """Training-effort percentage: labels the AL curve needs to reach the
    target over labels the baseline needs."""
    n_al = _first_reaching(curve_al, target_value, metric, "AL curve")
    n_base = _first_reaching(curve_base, target_value, metric, "base curve")
    return n_al / n_base


def _first_reaching(
    curve: list[IterationRecord], target: float, metric: str, name: str
) -> int:
    for record in curve:
        if getattr(record, metric) >= target:
            return record.labels_aligned
    raise ValueError(f"target not achieved by {name}")


@dataclass
class PercentileTargets:
    ps_low: float
    ps_high: float


def percentile_targets(converged_value: float, metric: str) -> PercentileTargets:
    """Fractional metric targets relative to a converged value."""
    if converged_value <= 0:
        raise ValueError("degenerate convergence")
    if metric == "mcc":
        return PercentileTargets(0.85 * converged_value, 0.90 * converged_value)
    if metric == "f1":
        return PercentileTargets(0.95 * converged_value, 0.99 * converged_value)
    raise ValueError(f"unsupported metric: {metric}")


def corpus_similarity(
    set_a: list[Segment],
    set_b: list[Segment],
    emb: WordEmbedding,
    sample_cap: int = 100,
    seed: int = 0,
) -> float:
    """Mean pairwise WMD between (samples of) two segment sets.

    Within one set (intra mode) all unordered distinct pairs are averaged;
    across sets all cross pairs are.  Lower means more similar.
    """
    if not set_a or not set_b:
        raise ValueError("segment sets must be non-empty")
    intra = set_a is set_b or [s.id for s in set_a] == [s.id for s in set_b]

    def sample_docs(segments: list[Segment], tag: int):
        rng = np.random.default_rng([seed, tag])
        if len(segments) > sample_cap:
            idx = sorted(rng.choice(len(segments), size=sample_cap, replace=False))
            segments = [segments[i] for i in idx]
        docs = [nbow(emb, tokenize(s.text)) for s in segments]
        docs = [d for d in docs if d is not None]
        if not docs:
            raise ValueError("all sampled segments are out of vocabulary")
        return docs

    def dist(a, b) -> float:
        if len(a) + len(b) <= transport.DEFAULT_SUPPORT_CAP:
            return transport.wmd_exact(a, b, emb)
        return transport.wmd_sinkhorn(a, b, emb)

    docs_a = sample_docs(set_a, 0xA)
    if intra:
        if len(docs_a) < 2:
            raise ValueError("intra similarity needs at least two in-vocabulary segments")
        values = [
            dist(docs_a[i], docs_a[j])
            for i in range(len(docs_a))
            for j in range(i + 1, len(docs_a))
        ]
    else:
        docs_b = sample_docs(set_b, 0xB)
        values = [dist(da, db) for da in docs_a for db in docs_b]
    return float(np.mean(values))


# --- CSV --------------------------------------------------------------------


def records_to_csv(records: list[IterationRecord]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(str(getattr(r, col)) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_records_csv(records: list[IterationRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(records_to_csv(records))

"""HTTP facade for live labeling sessions.

A session bootstraps on the simulated oracle (humans never label the
bootstrap), then parks awaiting labels; submissions are validated fully
before any state changes, and every mutating endpoint is idempotent on retry
via client-supplied request tokens.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .embedding import WordEmbedding
from .oracle import (
    WORKERS_PER_SEGMENT,
    GroundTruth,
    LabelResponse,
    RelabelMode,
    SimulatedOracle,
)
from .runner import (
    ActiveLearningSession,
    ExperimentConfig,
    IterationRecord,
    derive_seed,
)
from .segmenter import Category, Segment
from .strategies import StrategyKind

_CATEGORY_BANNER = {
    Category.CONTACT: "CONTACT",
    Category.LOCATION: "LOCATION",
    Category.DEVICE: "DEVICE ID",
}


def question_set(category: Category) -> dict[str, str]:
    """The two survey questions plus the honesty check, category substituted."""
    banner = _CATEGORY_BANNER[category]
    return {
        "q1": (
            "Does this segment describe a FIRST PARTY data practice "
            "(the service itself collecting or using information from users)?"
        ),
        "q2": f"Does the segment claim to collect or use {banner} information?",
        "honesty": (
            "Did you read the segment and answer the questions carefully? "
            "You will receive full payment regardless of your answer."
        ),
    }


@dataclass
class ServiceContext:
    """Server-side data every session shares: pool, truths, embedding, test set."""

    segments: list[Segment]
    truths: dict[str, GroundTruth]
    emb: WordEmbedding
    test_set: list[tuple[np.ndarray, int]]
    n_workers: int = 200
    journal_path: str | None = None


class SessionCreateBody(BaseModel):
    category: str = "contact"
    strategy: str = "lc"
    at: float = 0.8
    relabel_mode: str = "label_and_discard"
    bootstrap_labels: int = 100
    al_batch_requested: int = 30
    le_budget: int = 8000
    seed: int = 0
    eer_subsample: float = 0.5
    request_token: str | None = None


class ResponseBody(BaseModel):
    segment_id: str
    worker_id: str
    q1_relevant: bool
    q2_collect: bool
    honesty_ok: bool


class LabelsBody(BaseModel):
    responses: list[ResponseBody]
    request_token: str | None = None


class ConfigPatchBody(BaseModel):
    strategy: str | None = None
    at: float | None = None
    request_token: str | None = None


@dataclass
class _Holder:
    session: ActiveLearningSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    token_cache: dict[str, dict] = field(default_factory=dict)


def _record_dict(r: IterationRecord) -> dict:
    return {
        "iteration": r.iteration,
        "le_spent": r.le_spent,
        "labels_aligned": r.labels_aligned,
        "nsr_train": r.nsr_train,
        "nsr_pool": r.nsr_pool,
        "ar": r.ar,
        "accuracy": r.accuracy,
        "precision": r.precision,
        "recall": r.recall,
        "f1": r.f1,
        "mcc": r.mcc,
    }


def build_session(context: ServiceContext, cfg: ExperimentConfig) -> ActiveLearningSession:
    """Construct a session and run its simulated bootstrap to completion."""
    oracle = SimulatedOracle(
        context.truths, seed=derive_seed(cfg.seed, "oracle"), n_workers=context.n_workers
    )
    session = ActiveLearningSession(cfg, context.segments, context.emb, context.test_set, oracle)
    while not session.finished and session.phase == "bootstrap":
        responses = {
            item["segment_id"]: oracle.respond(item["segment_id"], item["labeling_iteration"])
            for item in session.pending_batch()
        }
        session.submit_responses(responses)
    return session


def _config_from_body(body: "SessionCreateBody") -> ExperimentConfig:
    return ExperimentConfig(
        category=Category(body.category),
        strategy=StrategyKind(body.strategy),
        at=body.at,
        relabel_mode=RelabelMode(body.relabel_mode),
        bootstrap_labels=body.bootstrap_labels,
        al_batch_requested=body.al_batch_requested,
        le_budget=body.le_budget,
        eer_subsample=body.eer_subsample,
        seed=body.seed,
    )


def replay_journal(context: ServiceContext, journal_path) -> dict[str, ActiveLearningSession]:
    """Rebuild sessions after a crash by re-driving the journaled events."""
    sessions: dict[str, ActiveLearningSession] = {}
    with open(journal_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            event = json.loads(line)
            session_id = event["session_id"]
            if event["event"] == "create":
                body = SessionCreateBody(**event["config"])
                sessions[session_id] = build_session(context, _config_from_body(body))
            elif event["event"] == "labels":
                grouped: dict[str, list[LabelResponse]] = {}
                for r in event["responses"]:
                    grouped.setdefault(r["segment_id"], []).append(LabelResponse(**r))
                sessions[session_id].submit_responses(grouped)
            elif event["event"] == "config":
                patch = event["patch"]
                strategy = (
                    StrategyKind(patch["strategy"]) if patch.get("strategy") is not None else None
                )
                sessions[session_id].update_config(strategy=strategy, at=patch.get("at"))
    return sessions


def create_app(context: ServiceContext, restore: bool = False) -> FastAPI:
    app = FastAPI(title="prival labeling service")
    sessions: dict[str, _Holder] = {}
    create_tokens: dict[str, dict] = {}
    registry_lock = threading.Lock()

    if restore and context.journal_path is not None:
        try:
            for sid, session in replay_journal(context, context.journal_path).items():
                sessions[sid] = _Holder(session=session)
        except FileNotFoundError:
            pass

    def journal(event: dict) -> None:
        if context.journal_path is None:
            return
        with open(context.journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")

    def get_holder(session_id: str) -> _Holder:
        holder = sessions.get(session_id)
        if holder is None:
            raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
        return holder

    def state_name(session: ActiveLearningSession) -> str:
        return "finished" if session.finished else "awaiting_labels"

    def pending_payload(session: ActiveLearningSession) -> list[dict]:
        qs = question_set(session.cfg.category)
        return [dict(item, question_set=qs) for item in session.pending_batch()]

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreateBody):
        if body.request_token and body.request_token in create_tokens:
            return create_tokens[body.request_token]
        if not 0.5 < body.at <= 1.0:
            raise HTTPException(status_code=400, detail="at must exceed 0.5 and not exceed 1.0")
        try:
            cfg = _config_from_body(body)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        session = build_session(context, cfg)
        session_id = uuid.uuid4().hex
        with registry_lock:
            sessions[session_id] = _Holder(session=session)
        payload = {
            "session_id": session_id,
            "state": state_name(session),
            "pending": pending_payload(session),
        }
        if body.request_token:
            create_tokens[body.request_token] = payload
        journal({"event": "create", "session_id": session_id, "config": body.model_dump()})
        return payload

    @app.get("/sessions/{session_id}/batch")
    def next_batch(session_id: str):
        holder = get_holder(session_id)
        session = holder.session
        if session.finished:
            raise HTTPException(status_code=409, detail="session is finished")
        return {"state": state_name(session), "items": pending_payload(session)}

    @app.post("/sessions/{session_id}/labels")
    def submit_labels(session_id: str, body: LabelsBody):
        holder = get_holder(session_id)
        if not holder.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="a submission is already in progress")
        try:
            if body.request_token and body.request_token in holder.token_cache:
                return holder.token_cache[body.request_token]
            session = holder.session
            if session.finished:
                raise HTTPException(status_code=409, detail="session is finished")

            grouped: dict[str, list[LabelResponse]] = {}
            for r in body.responses:
                grouped.setdefault(r.segment_id, []).append(
                    LabelResponse(
                        worker_id=r.worker_id,
                        segment_id=r.segment_id,
                        q1_relevant=r.q1_relevant,
                        q2_collect=r.q2_collect,
                        honesty_ok=r.honesty_ok,
                    )
                )
            pending = set(session.pending)
            unknown = sorted(set(grouped) - pending)
            if unknown:
                raise HTTPException(status_code=400, detail=f"unknown segment ids: {unknown}")
            offenders = sorted(
                sid
                for sid in pending
                if len(grouped.get(sid, [])) != WORKERS_PER_SEGMENT
                or len({r.worker_id for r in grouped.get(sid, [])}) != WORKERS_PER_SEGMENT
            )
            if offenders:
                raise HTTPException(
                    status_code=400,
                    detail=f"each pending segment needs exactly {WORKERS_PER_SEGMENT} "
                    f"responses with distinct workers; offenders: {offenders}",
                )
            repeats = sorted(
                sid
                for sid, rs in grouped.items()
                if {r.worker_id for r in rs}
                & {r.worker_id for r in session.states[sid].responses}
            )
            if repeats:
                raise HTTPException(
                    status_code=400,
                    detail=f"workers already answered these segments: {repeats}",
                )

            outcomes = session.submit_responses(grouped)
            payload = {
                "state": state_name(session),
                "outcomes": [
                    {"segment_id": o.segment_id, "outcome": o.outcome.value, "ap": o.ap}
                    for o in outcomes
                ],
                "metrics": _record_dict(session.records[-1]) if session.records else None,
                "pending": pending_payload(session),
            }
            if body.request_token:
                holder.token_cache[body.request_token] = payload
            journal(
                {
                    "event": "labels",
                    "session_id": session_id,
                    "responses": [r.model_dump() for r in body.responses],
                }
            )
            return payload
        finally:
            holder.lock.release()

    @app.get("/sessions/{session_id}/metrics")
    def session_metrics(session_id: str):
        holder = get_holder(session_id)
        session = holder.session
        return {
            "state": state_name(session),
            "records": [_record_dict(r) for r in session.records],
            "config": {
                "category": session.cfg.category.value,
                "strategy": session.cfg.strategy.value,
                "at": session.cfg.at,
                "relabel_mode": session.cfg.relabel_mode.value,
            },
            "config_events": session.config_events,
            "live": {
                "labels_aligned": len(session.labeled_labels),
                "le_spent": session.le_spent,
                "nsr_pool": session.pool_nsr(),
            },
        }

    @app.patch("/sessions/{session_id}/config")
    def patch_config(session_id: str, body: ConfigPatchBody):
        holder = get_holder(session_id)
        if not holder.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="a submission is already in progress")
        try:
            if body.request_token and body.request_token in holder.token_cache:
                return holder.token_cache[body.request_token]
            session = holder.session
            try:
                strategy = StrategyKind(body.strategy) if body.strategy is not None else None
                session.update_config(strategy=strategy, at=body.at)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
            payload = {
                "state": state_name(session),
                "config": {
                    "strategy": session.cfg.strategy.value,
                    "at": session.cfg.at,
                },
            }
            if body.request_token:
                holder.token_cache[body.request_token] = payload
            journal({"event": "config", "session_id": session_id, "patch": body.model_dump()})
            return payload
        finally:
            holder.lock.release()

    return app

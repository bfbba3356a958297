"""Acquisition strategies for selecting the next batch of unlabeled segments.

All selectors are pure functions of the request (including its seed), return
exactly k distinct ids from the pool, and break score ties by ascending
segment id.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import classifier
from .classifier import ClassifierModel, TrainConfig

logger = logging.getLogger(__name__)


class StrategyKind(str, Enum):
    RANDOM = "random"
    LC = "lc"
    MARGIN = "margin"
    ENTROPY = "entropy"
    EER = "eer"
    ID = "id"
    BMU = "bmu"


@dataclass
class SelectionRequest:
    k: int
    ids: list[str]
    features: np.ndarray  # |pool| x dim
    model: ClassifierModel
    seed: int
    labeled_features: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    labeled_labels: np.ndarray | None = None  # required for EER retraining
    train_cfg: TrainConfig | None = None  # required for EER retraining
    eer_subsample: float = 0.5
    labeled_count: int | None = None  # overrides len(labeled_features) in BMU's mixing weight

    def __post_init__(self) -> None:
        if len(self.ids) == 0:
            raise ValueError("pool must be non-empty")
        if self.k > len(self.ids):
            raise ValueError("k exceeds pool size")
        if not 0 < self.eer_subsample <= 1:
            raise ValueError("eer_subsample must be in (0, 1]")


def score_lc(p: float) -> float:
    """Least-confidence score 1 - max(p, 1-p); 0.5 is maximally uncertain."""
    return min(p, 1.0 - p)


def score_margin(p: float) -> float:
    """Negated margin between the two class probabilities (higher = smaller margin)."""
    return -abs(p - (1.0 - p))


def score_entropy(p: float) -> float:
    """Binary entropy with the 0*log(0) := 0 convention."""
    h = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            h -= q * math.log(q)
    return h


def derived_train_seed(seed: int, x: np.ndarray, label: int) -> int:
    """Deterministic retrain seed for an EER hypothetical (seed, x, y).

    Derived from the candidate's feature vector so identical instances score
    identically and ties resolve on segment id.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode())
    h.update(np.ascontiguousarray(x, dtype=np.float64).tobytes())
    h.update(bytes([label]))
    return int.from_bytes(h.digest(), "big")


def _top_k_by_score(ids: list[str], scores: np.ndarray, k: int) -> list[str]:
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [ids[i] for i in order[:k]]


def information_density(pool_features: np.ndarray) -> np.ndarray:
    """Mean cosine similarity of each pool element to the whole pool
    (self term included).  Zero-norm features contribute and receive 0."""
    feats = np.asarray(pool_features, dtype=np.float64)
    norms = np.linalg.norm(feats, axis=1)
    unit = np.zeros_like(feats)
    nonzero = norms > 0
    unit[nonzero] = feats[nonzero] / norms[nonzero, None]
    sims = unit @ unit.T
    return sims.mean(axis=1)


def expected_error_after(
    labeled_features: np.ndarray,
    labeled_labels: np.ndarray,
    candidate_feature: np.ndarray,
    candidate_label: int,
    pool_features: np.ndarray,
    cfg: TrainConfig,
    retrain_seed: int,
) -> float:
    """Expected binary loss over the pool after hypothetically adding
    (candidate, label) to the labeled set and retraining from scratch."""
    data = [(f, int(lbl)) for f, lbl in zip(labeled_features, labeled_labels)]
    data.append((candidate_feature, candidate_label))
    model = classifier.train(data, cfg, retrain_seed)
    probs = classifier.predict_proba_batch(model, pool_features)
    return float(np.mean(1.0 - np.maximum(probs, 1.0 - probs)))


def select_eer(req: SelectionRequest) -> list[str]:
    """Expected-error-reduction selection.

    Candidates are Bernoulli-subsampled at eer_subsample; each is scored by the
    label-probability-weighted expected binary loss of the retrained model over
    the full pool; the k lowest scores win.  Greedy, no within-batch retraining.
    """
    if req.labeled_labels is None or len(req.labeled_labels) == 0:
        raise ValueError("EER requires a non-empty labeled set")
    cfg = req.train_cfg or req.model.hyper

    rng = np.random.default_rng([req.seed, 0xEE2])
    keep = rng.random(len(req.ids)) < req.eer_subsample
    candidates = [i for i in range(len(req.ids)) if keep[i]]
    if len(candidates) < req.k:
        logger.warning("EER subsample smaller than k; falling back to the full pool")
        candidates = list(range(len(req.ids)))

    probs = classifier.predict_proba_batch(req.model, req.features)
    scores: dict[int, float] = {}
    for i in candidates:
        p1 = probs[i]
        err = 0.0
        for y, py in ((0, 1.0 - p1), (1, p1)):
            err += py * expected_error_after(
                req.labeled_features,
                req.labeled_labels,
                req.features[i],
                y,
                req.features,
                cfg,
                derived_train_seed(req.seed, req.features[i], y),
            )
        scores[i] = err

    order = sorted(candidates, key=lambda i: (scores[i], req.ids[i]))
    return [req.ids[i] for i in order[: req.k]]


def select_id(req: SelectionRequest) -> list[str]:
    """Information-density selection: LC uncertainty weighted by density."""
    probs = classifier.predict_proba_batch(req.model, req.features)
    lc = np.minimum(probs, 1.0 - probs)
    density = information_density(req.features)
    return _top_k_by_score(req.ids, lc * density, req.k)


def select_bmu(req: SelectionRequest) -> list[str]:
    """Ranked batch-mode uncertainty.

    Each pick maximizes alpha * (1 - max-cosine to labeled+selected) +
    (1 - alpha) * LC, with alpha = |remaining pool| / (|remaining pool| +
    |labeled| + |selected|); the similarity to an empty labeled set is 0.
    """
    feats = req.features
    probs = classifier.predict_proba_batch(req.model, feats)
    lc = np.minimum(probs, 1.0 - probs)

    norms = np.linalg.norm(feats, axis=1)
    unit = np.zeros_like(feats)
    nz = norms > 0
    unit[nz] = feats[nz] / norms[nz, None]

    labeled_count = (
        req.labeled_count if req.labeled_count is not None else len(req.labeled_features)
    )
    max_sim = np.zeros(len(req.ids))
    if len(req.labeled_features) > 0:
        lab = np.asarray(req.labeled_features, dtype=np.float64)
        lnorms = np.linalg.norm(lab, axis=1)
        lunit = np.zeros_like(lab)
        lnz = lnorms > 0
        lunit[lnz] = lab[lnz] / lnorms[lnz, None]
        max_sim = np.max(unit @ lunit.T, axis=1) if lab.shape[0] else max_sim

    remaining = list(range(len(req.ids)))
    selected: list[str] = []
    n_selected = 0
    while n_selected < req.k:
        pool_size = len(remaining)
        alpha = pool_size / (pool_size + labeled_count + n_selected)
        best = min(
            remaining,
            key=lambda i: (-(alpha * (1.0 - max_sim[i]) + (1.0 - alpha) * lc[i]), req.ids[i]),
        )
        selected.append(req.ids[best])
        remaining.remove(best)
        n_selected += 1
        sims = unit @ unit[best]
        np.maximum(max_sim, sims, out=max_sim)
    return selected


def select(kind: StrategyKind, req: SelectionRequest) -> list[str]:
    """Dispatch to the requested strategy; k = 0 selects nothing."""
    if req.k == 0:
        return []
    if kind == StrategyKind.RANDOM:
        rng = np.random.default_rng(req.seed)
        picks = rng.choice(len(req.ids), size=req.k, replace=False)
        return [req.ids[i] for i in picks]
    if kind in (StrategyKind.LC, StrategyKind.MARGIN, StrategyKind.ENTROPY):
        probs = classifier.predict_proba_batch(req.model, req.features)
        scorer = {
            StrategyKind.LC: score_lc,
            StrategyKind.MARGIN: score_margin,
            StrategyKind.ENTROPY: score_entropy,
        }[kind]
        scores = np.array([scorer(float(p)) for p in probs])
        return _top_k_by_score(req.ids, scores, req.k)
    if kind == StrategyKind.EER:
        return select_eer(req)
    if kind == StrategyKind.ID:
        return select_id(req)
    if kind == StrategyKind.BMU:
        return select_bmu(req)
    raise ValueError(f"unknown strategy kind: {kind}")

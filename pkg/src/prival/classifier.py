"""A linear probabilistic classifier over segment features.

This is the reference implementation behind the pluggable classifier surface:
anything providing train(data, cfg, seed) -> model and
predict_proba(model, x) -> float can replace it.  Training minimizes mean
binary cross-entropy plus an L2 penalty with minibatch SGD or Adam-style
adaptive moments, fully deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .embedding import WordEmbedding, sentence_centroid, tokenize
from .segmenter import Segment


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"diverged at step {step}")
        self.step = step


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 20
    epochs: int = 4
    l2: float = 1e-4
    optimizer: str = "adam"  # "adam" or "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("learning_rate, batch_size and epochs must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer: {self.optimizer}")


@dataclass
class ClassifierModel:
    weights: np.ndarray
    bias: float
    hyper: TrainConfig
    train_seed: int

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class EvalResult:
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float


def featurize(segment: Segment, emb: WordEmbedding) -> np.ndarray:
    """Mean embedding of the segment's in-vocabulary tokens."""
    vec = sentence_centroid(emb, tokenize(segment.text))
    if vec is None:
        raise ValueError(f"unfeaturizable segment {segment.id}: all tokens out of vocabulary")
    return vec


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train(
    data: list[tuple[np.ndarray, int]],
    cfg: TrainConfig,
    seed: int,
) -> ClassifierModel:
    """Minibatch training from zero-initialized weights.

    Runs epochs * ceil(n / batch_size) update steps on minibatches drawn from
    a seeded per-epoch shuffle; loss is mean BCE + l2 * ||w||^2.
    """
    if not data:
        raise ValueError("training data must be non-empty")
    x = np.vstack([np.asarray(f, dtype=np.float64) for f, _ in data])
    y = np.array([float(lbl) for _, lbl in data])
    n, dim = x.shape

    w = np.zeros(dim)
    b = 0.0
    mw = np.zeros(dim)
    vw = np.zeros(dim)
    mb = vb = 0.0
    t = 0
    rng = np.random.default_rng(seed)

    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xb, yb = x[batch], y[batch]
            p = _sigmoid(xb @ w + b)
            pc = np.clip(p, 1e-12, 1.0 - 1e-12)
            loss = float(-np.mean(yb * np.log(pc) + (1 - yb) * np.log(1 - pc)))
            loss += cfg.l2 * float(w @ w)
            t += 1
            if not math.isfinite(loss):
                raise TrainingDiverged(t)
            err = p - yb
            gw = xb.T @ err / len(batch) + 2.0 * cfg.l2 * w
            gb = float(np.mean(err))
            if cfg.optimizer == "sgd":
                w -= cfg.learning_rate * gw
                b -= cfg.learning_rate * gb
            else:
                mw = cfg.beta1 * mw + (1 - cfg.beta1) * gw
                vw = cfg.beta2 * vw + (1 - cfg.beta2) * gw * gw
                mb = cfg.beta1 * mb + (1 - cfg.beta1) * gb
                vb = cfg.beta2 * vb + (1 - cfg.beta2) * gb * gb
                c1 = 1 - cfg.beta1**t
                c2 = 1 - cfg.beta2**t
                w -= cfg.learning_rate * (mw / c1) / (np.sqrt(vw / c2) + cfg.eps)
                b -= cfg.learning_rate * (mb / c1) / (math.sqrt(vb / c2) + cfg.eps)

    return ClassifierModel(weights=w, bias=b, hyper=cfg, train_seed=seed)


def predict_proba(model: ClassifierModel, feature: np.ndarray) -> float:
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != model.weights.shape:
        raise ValueError("feature dimension mismatch")
    return float(_sigmoid(np.array([feature @ model.weights + model.bias]))[0])


def predict_proba_batch(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != model.dim:
        raise ValueError("feature dimension mismatch")
    return _sigmoid(features @ model.weights + model.bias)


def mcc_from_counts(tp: int, tn: int, fp: int, fn: int) -> float:
    """Matthews correlation; any zero factor in the denominator yields 0."""
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def evaluate(
    model: ClassifierModel,
    test: list[tuple[np.ndarray, int]],
    threshold: float = 0.5,
) -> EvalResult:
    if not test:
        raise ValueError("test data must be non-empty")
    feats = np.vstack([np.asarray(f, dtype=np.float64) for f, _ in test])
    labels = np.array([int(lbl) for _, lbl in test])
    preds = (predict_proba_batch(model, feats) >= threshold).astype(int)

    cm = ConfusionMatrix(
        tp=int(np.sum((preds == 1) & (labels == 1))),
        tn=int(np.sum((preds == 0) & (labels == 0))),
        fp=int(np.sum((preds == 1) & (labels == 0))),
        fn=int(np.sum((preds == 0) & (labels == 1))),
    )
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalResult(
        confusion=cm,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        mcc=mcc_from_counts(cm.tp, cm.tn, cm.fp, cm.fn),
    )


def save_checkpoint(model: ClassifierModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "dim": model.dim,
                "weights": model.weights.tolist(),
                "bias": model.bias,
                "hyper": {
                    "learning_rate": model.hyper.learning_rate,
                    "batch_size": model.hyper.batch_size,
                    "epochs": model.hyper.epochs,
                    "l2": model.hyper.l2,
                    "optimizer": model.hyper.optimizer,
                },
                "train_seed": model.train_seed,
            },
            fh,
        )


def load_checkpoint(path) -> ClassifierModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return ClassifierModel(
        weights=np.array(obj["weights"], dtype=np.float64),
        bias=float(obj["bias"]),
        hyper=TrainConfig(**obj["hyper"]),
        train_seed=int(obj["train_seed"]),
    )

"""Word vectors, normalized bag-of-words documents, and vector similarity primitives."""

from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass, field

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class VectorParseError(ValueError):
    """Raised when a word-vector file cannot be parsed."""


@dataclass
class WordEmbedding:
    """Vocabulary-indexed dense word vectors.

    vocab maps each token to a row of `vectors`; rows all share dimension `dim`.
    Immutable after load: every operation below only reads it.
    """

    dim: int
    vocab: dict[str, int]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("embedding dimension must be positive")
        if self.vectors.shape != (len(self.vocab), self.dim):
            raise ValueError("vector matrix shape does not match vocab")

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab[token]]


@dataclass
class NBowDoc:
    """Normalized bag-of-words over embedding rows: distinct indices, weights sum to 1."""

    indices: list[int]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.indices) == 0:
            raise ValueError("empty nBOW document")
        if len(self.indices) != len(set(self.indices)):
            raise ValueError("nBOW indices must be distinct")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-9:
            raise ValueError("nBOW weights must sum to 1")

    def __len__(self) -> int:
        return len(self.indices)


def load_vectors(path, max_vocab: int | None = None) -> WordEmbedding:
    """Parse a text-format vector file: optional "<count> <dim>" header, then
    one "token v1 ... vd" line per word.

    Later duplicates of a token are ignored.  A line whose value count does not
    match the established dimension is a fatal parse error naming the line.
    """
    tokens: dict[str, int] = {}
    rows: list[np.ndarray] = []
    dim: int | None = None

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                except ValueError:
                    pass
                else:
                    continue  # header line
            word, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise VectorParseError(f"line {lineno}: no vector values")
                dim = len(values)
            if len(values) != dim:
                raise VectorParseError(
                    f"line {lineno}: expected {dim} values, found {len(values)}"
                )
            if word in tokens:
                continue
            if max_vocab is not None and len(tokens) >= max_vocab:
                break
            try:
                row = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise VectorParseError(f"line {lineno}: {exc}") from None
            tokens[word] = len(rows)
            rows.append(row)

    if dim is None or not rows:
        raise VectorParseError(f"{path}: no vectors found")
    return WordEmbedding(dim=dim, vocab=tokens, vectors=np.vstack(rows))


def fixture_embedding() -> WordEmbedding:
    """The small synthetic embedding shipped with the package (deterministic)."""
    ref = importlib.resources.files("prival.data") / "mini_vectors.vec"
    with importlib.resources.as_file(ref) as path:
        return load_vectors(path)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries, dropping empties."""
    return _TOKEN_RE.findall(text.lower())


def nbow(emb: WordEmbedding, tokens: list[str]) -> NBowDoc | None:
    """Count in-vocabulary tokens and normalize to a distribution.

    Returns None when every token is out of vocabulary (an empty distribution
    is not representable).  OOV tokens are skipped, not imputed.
    """
    counts: dict[int, int] = {}
    for tok in tokens:
        idx = emb.vocab.get(tok)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return None
    indices = list(counts)
    total = sum(counts.values())
    weights = np.array([counts[i] / total for i in indices], dtype=np.float64)
    return NBowDoc(indices=indices, weights=weights)


def sentence_centroid(emb: WordEmbedding, tokens: list[str]) -> np.ndarray | None:
    """Arithmetic mean of in-vocabulary token vectors; None if all OOV."""
    rows = [emb.vocab[t] for t in tokens if t in emb.vocab]
    if not rows:
        return None
    return emb.vectors[rows].mean(axis=0)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Standard cosine similarity, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("degenerate vector")
    return float(np.clip(float(np.dot(u, v)) / (nu * nv), -1.0, 1.0))

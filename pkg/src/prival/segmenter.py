"""Sentence splitting, category keyword filtering, and topic-boundary
segmentation driven by adjacent-sentence Word Mover's Distances."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum

from . import transport
from .embedding import WordEmbedding, nbow, tokenize
from .ingestion import Policy

TOPIC_BOUNDARY_CONSTANT = 2.5

# Cues signalling that the next sentence continues the current topic.
LINKAGE_CUES = ("include", "includes", "including", "for example", "such as", "as follows")

# Dotless lowercase forms protected from sentence splits after a period.
_ABBREVIATIONS = frozenset({"eg", "ie", "etc", "inc", "vs", "mr", "mrs", "ms", "dr", "no", "al"})

_PUNCT_RUN_RE = re.compile(r"[.!?]+")
_NEXT_CAP_RE = re.compile(r"\s+[A-Z]")
_PREV_WORD_RE = re.compile(r"([A-Za-z][A-Za-z.]*)$")


class Category(str, Enum):
    CONTACT = "contact"
    LOCATION = "location"
    DEVICE = "device"


class SegmentStatus(str, Enum):
    UNLABELED = "unlabeled"
    PUBLISHED = "published"
    ALIGNED = "aligned"
    DISCARDED = "discarded"
    AMBIGUOUS = "ambiguous"
    IRRELEVANT = "irrelevant"


@dataclass
class CategoryKeywords:
    category: Category
    keywords: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("keyword list must be non-empty")
        self.keywords = tuple(k.lower() for k in self.keywords)


DEFAULT_KEYWORDS = {
    Category.CONTACT: CategoryKeywords(
        Category.CONTACT, ("email", "phone number", "contact", "address book", "name")
    ),
    Category.LOCATION: CategoryKeywords(
        Category.LOCATION, ("location", "gps", "geo", "latitude", "longitude")
    ),
    Category.DEVICE: CategoryKeywords(
        Category.DEVICE, ("device", "ip address", "identifier", "imei", "advertising id")
    ),
}


@dataclass
class Sentence:
    index: int
    text: str
    tokens: list[str]


@dataclass
class Segment:
    id: str
    policy_id: str
    category: Category
    span_start: int
    span_end: int  # inclusive
    text: str
    status: SegmentStatus = SegmentStatus.UNLABELED
    label: str | None = None  # "positive" / "negative", set iff status == ALIGNED


def split_sentences(text: str) -> list[Sentence]:
    """Split on '.', '!', '?' followed by whitespace+capital or end of text.

    A period directly after a protected abbreviation never ends a sentence.
    """
    boundaries: list[int] = []
    for m in _PUNCT_RUN_RE.finditer(text):
        end = m.end()
        if end < len(text) and not _NEXT_CAP_RE.match(text, end):
            continue
        if m.group() == ".":
            prev = _PREV_WORD_RE.search(text, max(0, m.start() - 40), m.start())
            if prev and prev.group(1).replace(".", "").lower() in _ABBREVIATIONS:
                continue
        boundaries.append(end)

    sentences: list[Sentence] = []
    start = 0
    for end in boundaries + [len(text)]:
        piece = text[start:end].strip()
        start = end
        if piece:
            sentences.append(Sentence(index=len(sentences), text=piece, tokens=tokenize(piece)))
    return sentences


def category_matches(sentence: Sentence, keywords: CategoryKeywords) -> bool:
    lowered = sentence.text.lower()
    return any(kw in lowered for kw in keywords.keywords)


def linkage_forward(sentence: Sentence) -> bool:
    """True when the sentence signals that the next one continues its topic."""
    text = sentence.text.rstrip()
    if text.endswith((";", ":", "?")):
        return True
    lowered = text.lower()
    return any(cue in lowered for cue in LINKAGE_CUES)


def segment_threshold(distances: list[float], c: float = TOPIC_BOUNDARY_CONSTANT) -> float:
    """Boundary threshold: mean + c * population standard deviation."""
    if not distances:
        raise ValueError("no adjacent pairs")
    n = len(distances)
    mu = sum(distances) / n
    var = sum((d - mu) ** 2 for d in distances) / n
    return mu + c * math.sqrt(var)


def adjacent_distances(sentences: list[Sentence], emb: WordEmbedding) -> list[float]:
    """WMD between each consecutive sentence pair.

    Pairs involving an all-OOV sentence inherit the mean of the computable
    pairs (0.0 when nothing is computable), so vocabulary gaps never force a
    boundary on their own.
    """
    docs = [nbow(emb, s.tokens) for s in sentences]
    raw: list[float | None] = []
    for left, right in zip(docs, docs[1:]):
        if left is None or right is None:
            raw.append(None)
            continue
        if len(left) + len(right) <= transport.DEFAULT_SUPPORT_CAP:
            raw.append(transport.wmd_exact(left, right, emb))
        else:
            raw.append(transport.wmd_sinkhorn(left, right, emb))
    known = [d for d in raw if d is not None]
    fill = sum(known) / len(known) if known else 0.0
    return [d if d is not None else fill for d in raw]


def topic_boundaries(
    sentences: list[Sentence],
    emb: WordEmbedding,
    c: float = TOPIC_BOUNDARY_CONSTANT,
    distances: list[float] | None = None,
) -> list[int]:
    """Indices i where a topic boundary separates sentences i and i+1: the
    pair's WMD exceeds the threshold and sentence i has no forward linkage."""
    if len(sentences) < 2:
        return []
    if distances is None:
        distances = adjacent_distances(sentences, emb)
    st = segment_threshold(distances, c)
    return [
        i
        for i, dist in enumerate(distances)
        if dist > st and not linkage_forward(sentences[i])
    ]


def segment_policy(
    policy: Policy,
    category: Category,
    keywords: CategoryKeywords,
    emb: WordEmbedding,
    c: float = TOPIC_BOUNDARY_CONSTANT,
) -> list[Segment]:
    """Assemble category segments for one policy.

    A topic boundary is placed between sentences i and i+1 when their WMD
    exceeds the per-policy threshold and sentence i carries no forward-linkage
    cue.  Only runs containing at least one category-matching sentence are
    emitted.
    """
    sentences = split_sentences(policy.sanitized_text)
    if not sentences:
        return []

    runs = []
    start = 0
    for i in topic_boundaries(sentences, emb, c):
        runs.append((start, i))
        start = i + 1
    runs.append((start, len(sentences) - 1))

    segments: list[Segment] = []
    for start, end in runs:
        if not any(category_matches(sentences[i], keywords) for i in range(start, end + 1)):
            continue
        segments.append(
            Segment(
                id=f"{policy.id}/{category.value}/{start}.{end}",
                policy_id=policy.id,
                category=category,
                span_start=start,
                span_end=end,
                text=" ".join(sentences[i].text for i in range(start, end + 1)),
            )
        )
    return segments


def write_segments_jsonl(segments: list[Segment], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in segments:
            fh.write(
                json.dumps(
                    {
                        "id": s.id,
                        "policy_id": s.policy_id,
                        "category": s.category.value,
                        "span_start": s.span_start,
                        "span_end": s.span_end,
                        "text": s.text,
                        "status": s.status.value,
                        "label": s.label,
                    }
                )
                + "\n"
            )


def read_segments_jsonl(path) -> list[Segment]:
    segments = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            segments.append(
                Segment(
                    id=obj["id"],
                    policy_id=obj["policy_id"],
                    category=Category(obj["category"]),
                    span_start=obj["span_start"],
                    span_end=obj["span_end"],
                    text=obj["text"],
                    status=SegmentStatus(obj["status"]),
                    label=obj.get("label"),
                )
            )
    return segments

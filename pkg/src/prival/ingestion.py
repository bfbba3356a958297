"""Load a local corpus of raw policy documents, sanitize markup, and apply
validity filters and exact-hash deduplication."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path

DEFAULT_REQUIRED_KEYWORDS = ("privacy policy", "legal")
MIN_WORD_COUNT = 50
DEFAULT_STOPWORD_RATIO = 0.05

# Small built-in stopword list; the language check is a ratio heuristic, not a
# statistical model.
ENGLISH_STOPWORDS = frozenset(
    """
    a about above after again all am an and any are as at be because been
    before being below between both but by can did do does doing down during
    each few for from further had has have having he her here hers him his
    how i if in into is it its just me more most my no nor not of off on
    once only or other our ours out over own same she should so some such
    than that the their theirs them then there these they this those through
    to too under until up very was we were what when where which while who
    whom why will with you your yours
    """.split()
)

_WORD_RE = re.compile(r"[a-z']+")
_WS_RE = re.compile(r"\s+")


@dataclass
class Policy:
    id: str
    source_path: str
    raw_text: str
    sanitized_text: str
    word_count: int
    content_hash: int


@dataclass
class CorpusLoadResult:
    policies: list[Policy]
    skipped_invalid: int
    skipped_unreadable: int


class _TagStripper(HTMLParser):
    """Best-effort tag removal; script/style contents are dropped entirely."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip += 1

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip:
            self._skip -= 1

    def handle_data(self, data):
        if not self._skip:
            self.parts.append(data)


def _strip_once(raw: str) -> str:
    parser = _TagStripper()
    parser.feed(raw)
    parser.close()
    return _WS_RE.sub(" ", " ".join(parser.parts)).strip()


def sanitize_markup(raw: str) -> str:
    """Remove tag spans and script/style contents, decode entities, collapse
    whitespace.  Iterates until the text is a fixpoint, so the result is
    idempotent even for nested entity encodings; malformed markup is tolerated.
    """
    text = raw
    for _ in range(8):
        stripped = _strip_once(text)
        if stripped == text:
            return stripped
        text = stripped
    return text


def content_digest(sanitized: str) -> int:
    """Deterministic 64-bit digest of the sanitized text."""
    h = hashlib.blake2b(sanitized.encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def is_valid_policy(
    text: str,
    required_keywords: tuple[str, ...] = DEFAULT_REQUIRED_KEYWORDS,
    stopword_ratio: float = DEFAULT_STOPWORD_RATIO,
) -> tuple[bool, str | None]:
    """Validity filter over sanitized text.

    Checks, in order: word count >= 50 ("length"), presence of a required
    keyword ("keyword"), and the English stopword-ratio heuristic
    ("language").  Returns (True, None) or (False, first-failing-check).
    """
    if len(text.split()) < MIN_WORD_COUNT:
        return False, "length"
    lowered = text.lower()
    if not any(kw in lowered for kw in required_keywords):
        return False, "keyword"
    words = _WORD_RE.findall(lowered)
    if not words:
        return False, "language"
    hits = sum(1 for w in words if w in ENGLISH_STOPWORDS)
    if hits / len(words) < stopword_ratio:
        return False, "language"
    return True, None


def load_corpus(directory) -> CorpusLoadResult:
    """Load every .txt/.html/.htm file under `directory`.

    Invalid files are skipped and counted; unreadable files are skipped with a
    separate count; exact duplicates (by sanitized-text digest) keep only the
    lexicographically-first source path.  Output is ordered by source path.
    """
    root = Path(directory)
    if not root.is_dir():
        raise NotADirectoryError(f"corpus directory not found: {directory}")

    paths = sorted(
        p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in (".txt", ".html", ".htm")
    )
    policies: list[Policy] = []
    seen_hashes: set[int] = set()
    skipped_invalid = 0
    skipped_unreadable = 0
    for path in paths:
        try:
            raw = path.read_text(encoding="utf-8", errors="strict")
        except (OSError, UnicodeDecodeError):
            skipped_unreadable += 1
            continue
        sanitized = sanitize_markup(raw)
        ok, _reason = is_valid_policy(sanitized)
        if not ok:
            skipped_invalid += 1
            continue
        digest = content_digest(sanitized)
        if digest in seen_hashes:
            continue
        seen_hashes.add(digest)
        policies.append(
            Policy(
                id=f"{digest:016x}",
                source_path=str(path),
                raw_text=raw,
                sanitized_text=sanitized,
                word_count=len(sanitized.split()),
                content_hash=digest,
            )
        )
    return CorpusLoadResult(
        policies=policies,
        skipped_invalid=skipped_invalid,
        skipped_unreadable=skipped_unreadable,
    )


def write_corpus_jsonl(policies: list[Policy], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in policies:
            fh.write(
                json.dumps(
                    {
                        "id": p.id,
                        "source_path": p.source_path,
                        "word_count": p.word_count,
                        "content_hash": p.content_hash,
                        "sanitized_text": p.sanitized_text,
                    }
                )
                + "\n"
            )


def read_corpus_jsonl(path) -> list[Policy]:
    policies = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            policies.append(
                Policy(
                    id=obj["id"],
                    source_path=obj["source_path"],
                    raw_text=obj["sanitized_text"],
                    sanitized_text=obj["sanitized_text"],
                    word_count=obj["word_count"],
                    content_hash=obj["content_hash"],
                )
            )
    return policies

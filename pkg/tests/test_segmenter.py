import numpy as np
import pytest

from prival.embedding import WordEmbedding
from prival.ingestion import Policy, content_digest
from prival.segmenter import (
    DEFAULT_KEYWORDS,
    Category,
    Sentence,
    category_matches,
    linkage_forward,
    segment_policy,
    segment_threshold,
    split_sentences,
    topic_boundaries,
    write_segments_jsonl,
)


def make_policy(text: str) -> Policy:
    return Policy(
        id="p1",
        source_path="p1.txt",
        raw_text=text,
        sanitized_text=text,
        word_count=len(text.split()),
        content_hash=content_digest(text),
    )


@pytest.fixture(scope="module")
def seg_emb() -> WordEmbedding:
    """Two well-separated word clusters so boundary locations are hand-checkable."""
    vocab = {
        "send": 0, "us": 1, "your": 2, "email": 3, "do": 4, "you": 5,
        "weather": 6, "nice": 7, "today": 8,
    }
    vectors = np.array(
        [
            [0.1, 0.0], [0.0, 0.1], [0.05, 0.05], [0.0, 0.0], [0.1, 0.1], [0.0, 0.05],
            [10.0, 10.0], [10.0, 11.0], [11.0, 10.0],
        ]
    )
    return WordEmbedding(dim=2, vocab=vocab, vectors=vectors)


class TestSplitSentences:
    def test_two_sentences(self):
        got = split_sentences("We collect data. We share it.")
        assert [s.text for s in got] == ["We collect data.", "We share it."]
        assert [s.index for s in got] == [0, 1]

    def test_abbreviation_protected(self):
        got = split_sentences("We use e.g. your email.")
        assert len(got) == 1

    def test_abbreviation_before_capital(self):
        got = split_sentences("See e.g. Section five. More text follows.")
        assert len(got) == 2

    def test_empty(self):
        assert split_sentences("") == []

    def test_question_and_exclamation(self):
        got = split_sentences("Do we sell data? No! We never would.")
        assert len(got) == 3

    def test_no_split_before_lowercase(self):
        got = split_sentences("We collect 3.5 million records. done")
        assert len(got) == 1

    def test_tokens_populated(self):
        got = split_sentences("IP address.")
        assert got[0].tokens == ["ip", "address"]


class TestCategoryMatches:
    def test_contact_email(self):
        s = Sentence(0, "Send us your email.", ["send", "us", "your", "email"])
        assert category_matches(s, DEFAULT_KEYWORDS[Category.CONTACT])

    def test_device_ip_address(self):
        s = Sentence(0, "We log your IP address.", ["we", "log", "your", "ip", "address"])
        assert category_matches(s, DEFAULT_KEYWORDS[Category.DEVICE])

    def test_no_match(self):
        s = Sentence(0, "We love our users.", ["we", "love", "our", "users"])
        for kw in DEFAULT_KEYWORDS.values():
            assert not category_matches(s, kw)


class TestLinkageForward:
    def test_colon(self):
        assert linkage_forward(Sentence(0, "Personal information includes:", []))

    def test_question_mark(self):
        assert linkage_forward(Sentence(0, "Do we sell your data?", []))

    def test_semicolon(self):
        assert linkage_forward(Sentence(0, "We store data;", []))

    def test_cue_words(self):
        assert linkage_forward(Sentence(0, "Examples are as follows.", []))
        assert linkage_forward(Sentence(0, "For example we store names.", []))
        assert linkage_forward(Sentence(0, "This includes your email.", []))

    def test_plain_sentence(self):
        assert not linkage_forward(Sentence(0, "We never sell data.", []))


class TestSegmentThreshold:
    def test_zero_sigma(self):
        assert segment_threshold([0.4, 0.4, 0.4], c=2.5) == pytest.approx(0.4)

    def test_hand_computed(self):
        # mean 0.4, population sigma sqrt(0.08/3) = 0.16329932
        assert segment_threshold([0.2, 0.4, 0.6], c=2.5) == pytest.approx(0.808248, abs=1e-6)

    def test_c_zero_gives_mean(self):
        assert segment_threshold([0.1, 0.5, 0.9], c=0.0) == pytest.approx(0.5)

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="no adjacent pairs"):
            segment_threshold([])


class TestSegmentPolicy:
    def test_no_boundaries_single_segment(self, seg_emb):
        policy = make_policy("Send us your email. Send us your email.")
        segments = segment_policy(
            policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], seg_emb
        )
        assert len(segments) == 1
        assert (segments[0].span_start, segments[0].span_end) == (0, 1)

    def test_boundary_between_distant_topics(self, seg_emb):
        # d(s0,s1) = 0, d(s1,s2) large: with c=0.5 the second pair exceeds
        # the threshold and sentence 1 has no linkage cue.
        policy = make_policy("Send us your email. Send us your email. Weather nice today.")
        sentences = split_sentences(policy.sanitized_text)
        assert topic_boundaries(sentences, seg_emb, c=0.5) == [1]
        segments = segment_policy(
            policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], seg_emb, c=0.5
        )
        # only the keyword-bearing run survives
        assert len(segments) == 1
        assert (segments[0].span_start, segments[0].span_end) == (0, 1)
        assert segments[0].text == "Send us your email. Send us your email."

    def test_linkage_suppresses_boundary(self, seg_emb):
        policy = make_policy("Send us your email. Do you send your email? Weather nice today.")
        sentences = split_sentences(policy.sanitized_text)
        assert topic_boundaries(sentences, seg_emb, c=0.5) == []
        segments = segment_policy(
            policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], seg_emb, c=0.5
        )
        assert len(segments) == 1
        assert (segments[0].span_start, segments[0].span_end) == (0, 2)

    def test_no_keyword_match_yields_nothing(self, seg_emb):
        policy = make_policy("Weather nice today. Weather nice today.")
        assert (
            segment_policy(policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], seg_emb)
            == []
        )

    def test_empty_policy(self, seg_emb):
        policy = make_policy("")
        assert (
            segment_policy(policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], seg_emb)
            == []
        )

    def test_single_sentence_policy(self, seg_emb):
        policy = make_policy("Send us your email.")
        segments = segment_policy(
            policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], seg_emb
        )
        assert len(segments) == 1

    def test_all_oov_sentences_fall_back_to_single_run(self, seg_emb):
        policy = make_policy("Zzz qqq email. Qqq zzz email.")
        segments = segment_policy(
            policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], seg_emb
        )
        assert len(segments) == 1

    def test_segments_ordered_and_disjoint(self, emb):
        text = (
            "We collect your email address. We store your phone number. "
            "Read our blog for news and updates. Weather and music and games. "
            "Our team loves building great products. We share your contact book. "
            "We never sell your name. Visit the website to read the terms. "
            "You can change your settings at any time. We also use your email."
        )
        policy = make_policy(text)
        segments = segment_policy(
            policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], emb, c=0.3
        )
        assert segments, "expected at least one segment"
        spans = [(s.span_start, s.span_end) for s in segments]
        assert spans == sorted(spans)
        for (_, end), (start2, _unused) in zip(spans, spans[1:]):
            assert end < start2

    def test_deterministic(self, emb, tmp_path):
        policy = make_policy(
            "We collect your email address. Weather and music today. "
            "We store your phone number. Our team loves great products."
        )
        a = segment_policy(policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], emb)
        b = segment_policy(policy, Category.CONTACT, DEFAULT_KEYWORDS[Category.CONTACT], emb)
        fa, fb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_segments_jsonl(a, fa)
        write_segments_jsonl(b, fb)
        assert fa.read_bytes() == fb.read_bytes()

    def test_raising_c_never_adds_boundaries(self, emb):
        rng = np.random.default_rng(33)
        words = list(emb.vocab)
        for _ in range(25):
            n_sent = int(rng.integers(4, 12))
            sents = []
            for _ in range(n_sent):
                k = int(rng.integers(2, 7))
                sents.append(" ".join(words[i] for i in rng.choice(len(words), size=k)).capitalize())
            sentences = split_sentences(". ".join(sents) + ".")
            counts = [
                len(topic_boundaries(sentences, emb, c)) for c in (0.0, 0.5, 1.0, 1.5, 2.5)
            ]
            assert counts == sorted(counts, reverse=True)

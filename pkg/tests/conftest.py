import numpy as np
import pytest

from prival.embedding import WordEmbedding, fixture_embedding, nbow, tokenize


@pytest.fixture(scope="session")
def emb() -> WordEmbedding:
    return fixture_embedding()


@pytest.fixture(scope="session")
def tiny_emb() -> WordEmbedding:
    """Hand-sized embedding whose vectors make distances easy to verify."""
    vocab = {"origin": 0, "east": 1, "north": 2, "far": 3}
    vectors = np.array(
        [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [3.0, 4.0],
        ]
    )
    return WordEmbedding(dim=2, vocab=vocab, vectors=vectors)


def doc_from_words(emb: WordEmbedding, words: list[str]):
    d = nbow(emb, words)
    assert d is not None
    return d


def random_fixture_doc(emb: WordEmbedding, rng: np.random.Generator, max_words: int = 8):
    words = list(emb.vocab)
    n = int(rng.integers(1, max_words + 1))
    picks = rng.choice(len(words), size=n, replace=True)
    return doc_from_words(emb, [words[i] for i in picks])


@pytest.fixture
def make_random_doc(emb):
    def _make(rng, max_words: int = 8):
        return random_fixture_doc(emb, rng, max_words)

    return _make


def tokens_of(text: str) -> list[str]:
    return tokenize(text)

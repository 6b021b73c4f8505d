"""Relation-specific adjacency builders and the tf-idf model behind the
natural-connection graph.

All builders return dense, symmetric, nonnegative float64 matrices over a
shared node set; normalization adds self-loops and rescales symmetrically.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document, Sentence, Vocabulary


def load_stopwords() -> frozenset[str]:
    """The fixed English stopword list shipped with the package."""
    text = resources.files("plexsum").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def read_stopword_file(path) -> frozenset[str]:
    text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def is_punctuation(surface: str) -> bool:
    return not any(ch.isalnum() for ch in surface)


# ---------------------------------------------------------------------------
# adjacency builders


def build_syntactic_graph(n_tokens: int, dep_edges) -> np.ndarray:
    """Binary undirected adjacency from dependency links; zero diagonal."""
    a = np.zeros((n_tokens, n_tokens), dtype=np.float64)
    for head, dep in dep_edges:
        if not (0 <= head < n_tokens and 0 <= dep < n_tokens):
            raise ValueError(f"dependency edge ({head}, {dep}) out of range for {n_tokens} tokens")
        if head == dep:
            raise ValueError(f"dependency edge ({head}, {dep}) is a self-edge")
        a[head, dep] = 1.0
        a[dep, head] = 1.0
    return a


def build_semantic_graph(x: np.ndarray) -> np.ndarray:
    """Absolute pairwise dot products of node embeddings, diagonal included."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("semantic graph input embeddings must be finite")
    return np.abs(x @ x.T)


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """Symmetric normalization with self-loops: D^-1/2 (A+I) D^-1/2 where D
    holds the row sums of A+I. Row sums are >= 1, so this never divides by
    zero."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("adjacency must be nonnegative and finite")
    b = a + np.eye(a.shape[0])
    inv_sqrt = b.sum(axis=1) ** -0.5
    # outer product first keeps the result exactly symmetric
    return b * np.outer(inv_sqrt, inv_sqrt)


# ---------------------------------------------------------------------------
# tf-idf keywords and the natural-connection graph


@dataclass
class TfidfModel:
    """Keyword document frequencies over a training corpus.

    Keywords are vocab ids whose df reached min_df and whose surface is
    neither a stopword nor punctuation; the unknown id is never a keyword.
    """

    n_docs: int
    min_df: int
    df: dict[int, int] = field(default_factory=dict)

    @property
    def keywords(self) -> set[int]:
        return set(self.df)

    def idf(self, vocab_id: int) -> float:
        return float(np.log(self.n_docs / self.df[vocab_id]))

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "n_docs": self.n_docs,
            "min_df": self.min_df,
            "df": {str(k): v for k, v in self.df.items()},
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "TfidfModel":
        if blob.get("version") != 1:
            raise ValueError(f"unsupported tfidf file version: {blob.get('version')}")
        return cls(blob["n_docs"], blob["min_df"], {int(k): v for k, v in blob["df"].items()})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TfidfModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_tfidf(corpus: Corpus, vocab: Vocabulary, min_df: int = 100,
              stopwords: frozenset[str] | None = None) -> TfidfModel:
    """Count document frequencies (once per document) and keep keywords with
    df >= min_df, excluding stopwords, punctuation, and the unknown id."""
    if len(corpus) == 0:
        raise ValueError("cannot fit a tfidf model on an empty corpus")
    if stopwords is None:
        stopwords = load_stopwords()
    df: Counter = Counter()
    for doc in corpus:
        seen: set[int] = set()
        for sent in doc.sentences:
            for tok in sent.tokens:
                seen.add(tok.vocab_id)
        df.update(seen)
    kept: dict[int, int] = {}
    for vocab_id, count in df.items():
        if vocab_id == 0 or count < min_df:
            continue
        surface = vocab.word_of(vocab_id)
        if surface in stopwords or is_punctuation(surface):
            continue
        kept[vocab_id] = count
    return TfidfModel(n_docs=len(corpus), min_df=min_df, df=dict(sorted(kept.items())))


def sentence_tfidf(sentence: Sentence, model: TfidfModel) -> dict[int, float]:
    """tf * ln(n_docs / df) for each keyword occurring in the sentence."""
    counts = Counter(t.vocab_id for t in sentence.tokens)
    return {
        vocab_id: count * model.idf(vocab_id)
        for vocab_id, count in counts.items()
        if vocab_id in model.df
    }


def natural_connection_from_vectors(vectors: list[dict[int, float]]) -> np.ndarray:
    """Pairwise sums of shared-keyword tfidf products; zero diagonal."""
    m = len(vectors)
    a = np.zeros((m, m), dtype=np.float64)
    for i in range(m):
        vi = vectors[i]
        for j in range(i + 1, m):
            vj = vectors[j]
            # summing in sorted keyword order keeps the result independent of
            # token order inside the sentences
            weight = 0.0
            for k in sorted(vi.keys() & vj.keys()):
                weight += vi[k] * vj[k]
            a[i, j] = weight
            a[j, i] = weight
    return a


def build_natural_connection_graph(doc: Document, model: TfidfModel) -> np.ndarray:
    return natural_connection_from_vectors([sentence_tfidf(s, model) for s in doc.sentences])

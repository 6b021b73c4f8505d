"""Corpus loading and normalization: tokenization, vocabulary, embedding
tables, dependency-edge ingestion, and greedy oracle labeling.

Corpora are JSONL, one document per line:

    {"id": str,
     "sentences": [{"tokens": [str], "dep_edges": [[int, int]]}],
     "summary": [[str]],
     "labels": [0/1]}          # optional, written by the oracle command

When a sentence omits "dep_edges" entirely, a linear chain (i, i+1) is
substituted; an explicit empty list is kept as-is.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rouge import rouge_n

UNK = "<unk>"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(raw_text: str) -> list[str]:
    """Lowercase, split on whitespace, and break punctuation characters out
    into standalone tokens. Never emits empty strings."""
    return _TOKEN_RE.findall(raw_text.lower())


@dataclass
class Token:
    surface: str
    vocab_id: int = 0


@dataclass
class Sentence:
    tokens: list[Token]
    dep_edges: list[tuple[int, int]] = field(default_factory=list)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Document:
    id: str
    sentences: list[Sentence]
    reference_summary: list[list[str]]
    oracle_labels: list[int] | None = None

    def reference_tokens(self) -> list[str]:
        return [tok for sent in self.reference_summary for tok in sent]


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, i):
        return self.documents[i]

    def index_with(self, vocab: "Vocabulary") -> "Corpus":
        """Assign vocab ids to every token, in place. Returns self."""
        for doc in self.documents:
            for sent in doc.sentences:
                for tok in sent.tokens:
                    tok.vocab_id = vocab.id_of(tok.surface)
        return self

    def require_labels(self) -> None:
        for doc in self.documents:
            if doc.oracle_labels is None:
                raise ValueError(
                    f"document '{doc.id}' has no oracle labels; run the `oracle` command first"
                )


# ---------------------------------------------------------------------------
# vocabulary and embeddings


class Vocabulary:
    """Frequency-ranked word list with id 0 reserved for the unknown token."""

    def __init__(self, words: list[str], max_size: int):
        if not words or words[0] != UNK:
            raise ValueError("vocabulary word list must start with the unknown token")
        self.words = list(words)
        self.max_size = max_size
        self._ids = {w: i for i, w in enumerate(self.words)}
        if len(self._ids) != len(self.words):
            raise ValueError("vocabulary contains duplicate words")

    def __len__(self) -> int:
        return len(self.words)

    def id_of(self, surface: str) -> int:
        return self._ids.get(surface, 0)

    def word_of(self, vocab_id: int) -> str:
        return self.words[vocab_id]

    def __contains__(self, surface: str) -> bool:
        return surface in self._ids

    def to_dict(self) -> dict:
        return {"version": 1, "max_size": self.max_size, "words": self.words}

    @classmethod
    def from_dict(cls, blob: dict) -> "Vocabulary":
        if blob.get("version") != 1:
            raise ValueError(f"unsupported vocabulary file version: {blob.get('version')}")
        return cls(blob["words"], blob["max_size"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocabulary(corpus: Corpus, max_size: int = 50_000) -> Vocabulary:
    """Keep the max_size-1 most frequent surfaces (ties broken
    lexicographically); frequencies are counted over document sentences."""
    if max_size < 2:
        raise ValueError(f"vocabulary max_size must be >= 2, got {max_size}")
    freq: Counter = Counter()
    for doc in corpus:
        for sent in doc.sentences:
            freq.update(t.surface for t in sent.tokens)
    ranked = sorted(freq, key=lambda w: (-freq[w], w))
    return Vocabulary([UNK] + ranked[: max_size - 1], max_size)


@dataclass
class EmbeddingTable:
    matrix: np.ndarray  # (vocab size, d_emb), float64

    @property
    def d_emb(self) -> int:
        return self.matrix.shape[1]


def load_embeddings(path, vocab: Vocabulary, d_emb: int) -> EmbeddingTable:
    """Read `word f1 ... fd` lines; vocab words missing from the file
    (including the unknown token) get all-zero rows."""
    matrix = np.zeros((len(vocab), d_emb), dtype=np.float64)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, fields = parts[0], parts[1:]
            if len(fields) != d_emb:
                raise ValueError(
                    f"embedding file line {lineno}: expected {d_emb} values, got {len(fields)}"
                )
            if word not in vocab:
                continue
            try:
                row = np.array([float(x) for x in fields])
            except ValueError as e:
                raise ValueError(f"embedding file line {lineno}: non-numeric value") from e
            if not np.all(np.isfinite(row)):
                raise ValueError(f"embedding file line {lineno}: non-finite value")
            matrix[vocab.id_of(word)] = row
    return EmbeddingTable(matrix)


def random_embeddings(vocab_size: int, d_emb: int, seed: int) -> EmbeddingTable:
    """Seeded stand-in for a pre-trained table; rows are fixed, not trained."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d_emb)
    return EmbeddingTable(rng.uniform(-bound, bound, size=(vocab_size, d_emb)))


# ---------------------------------------------------------------------------
# JSONL I/O


def _parse_sentence(raw: dict, doc_id: str, pos: int) -> Sentence:
    where = f"document '{doc_id}': sentences[{pos}]"
    tokens = raw.get("tokens")
    if not isinstance(tokens, list) or not tokens or not all(isinstance(t, str) and t for t in tokens):
        raise ValueError(f"{where}.tokens must be a nonempty list of nonempty strings")
    n = len(tokens)
    if "dep_edges" in raw:
        edges_raw = raw["dep_edges"]
        if not isinstance(edges_raw, list):
            raise ValueError(f"{where}.dep_edges must be a list of [head, dependent] pairs")
        edges = []
        for k, pair in enumerate(edges_raw):
            if (not isinstance(pair, list)) or len(pair) != 2 or not all(isinstance(x, int) for x in pair):
                raise ValueError(f"{where}.dep_edges[{k}] must be a pair of integers")
            h, d = pair
            if not (0 <= h < n and 0 <= d < n):
                raise ValueError(f"{where}.dep_edges[{k}] index out of range for {n} tokens")
            if h == d:
                raise ValueError(f"{where}.dep_edges[{k}] is a self-edge")
            edges.append((h, d))
    else:
        edges = [(i, i + 1) for i in range(n - 1)]  # no parse given: linear chain
    return Sentence([Token(t) for t in tokens], edges)


def _parse_document(raw: dict, lineno: int) -> Document:
    doc_id = raw.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ValueError(f"line {lineno}: document id missing or empty")
    sentences_raw = raw.get("sentences")
    if not isinstance(sentences_raw, list) or not sentences_raw:
        raise ValueError(f"document '{doc_id}': sentences must be a nonempty list")
    sentences = [_parse_sentence(s, doc_id, i) for i, s in enumerate(sentences_raw)]
    summary = raw.get("summary")
    if not isinstance(summary, list) or not all(
        isinstance(s, list) and all(isinstance(t, str) for t in s) for s in summary
    ):
        raise ValueError(f"document '{doc_id}': summary must be a list of token lists")
    labels = None
    if "labels" in raw:
        labels = raw["labels"]
        if (not isinstance(labels, list) or len(labels) != len(sentences)
                or not all(x in (0, 1) for x in labels)):
            raise ValueError(f"document '{doc_id}': labels must be 0/1 and match sentence count")
        if sum(labels) == 0:
            raise ValueError(f"document '{doc_id}': labels must mark at least one sentence")
        labels = [int(x) for x in labels]
    return Document(doc_id, sentences, summary, labels)


def load_corpus(path) -> Corpus:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"line {lineno}: invalid JSON ({e.msg})") from e
            docs.append(_parse_document(raw, lineno))
    return Corpus(docs)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            blob = {
                "id": doc.id,
                "sentences": [
                    {"tokens": s.surfaces(), "dep_edges": [list(e) for e in s.dep_edges]}
                    for s in doc.sentences
                ],
                "summary": doc.reference_summary,
            }
            if doc.oracle_labels is not None:
                blob["labels"] = doc.oracle_labels
            fh.write(json.dumps(blob) + "\n")


def truncate_document(doc: Document, max_sentences: int = 100, max_tokens: int = 100) -> Document:
    """Cap sentence and per-sentence token counts, dropping edges that leave
    the window. Refuses to drop every labeled sentence."""
    sentences = []
    for sent in doc.sentences[:max_sentences]:
        if len(sent.tokens) <= max_tokens:
            sentences.append(sent)
        else:
            kept = sent.tokens[:max_tokens]
            edges = [(h, d) for h, d in sent.dep_edges if h < max_tokens and d < max_tokens]
            sentences.append(Sentence(kept, edges))
    labels = doc.oracle_labels
    if labels is not None:
        labels = labels[:max_sentences]
        if sum(labels) == 0:
            raise ValueError(
                f"document '{doc.id}': truncation dropped every labeled sentence; "
                "re-run the oracle command on the truncated corpus"
            )
    return Document(doc.id, sentences, doc.reference_summary, labels)


def truncate_corpus(corpus: Corpus, max_sentences: int = 100, max_tokens: int = 100) -> Corpus:
    return Corpus([truncate_document(d, max_sentences, max_tokens) for d in corpus])


# ---------------------------------------------------------------------------
# greedy oracle labeling


def _selection_score(doc: Document, indices: list[int], reference: list[str]) -> float:
    candidate: list[str] = []
    for i in sorted(indices):
        candidate.extend(doc.sentences[i].surfaces())
    r1 = rouge_n(candidate, reference, 1).f1
    r2 = rouge_n(candidate, reference, 2).f1
    return 0.5 * (r1 + r2)


def greedy_oracle_selection(doc: Document, max_oracle: int = 3) -> list[int]:
    """Pick sentences one at a time, each step adding the sentence that most
    improves the mean of ROUGE-1 and ROUGE-2 F1 against the reference; stop
    when nothing improves or max_oracle is reached. Ties go to the lowest
    index. If no pick ever improves on the empty set, the argmax single
    sentence is returned so the label vector is never all-zero."""
    reference = doc.reference_tokens()
    if not reference:
        raise ValueError(f"document '{doc.id}': reference summary is empty")
    m = len(doc.sentences)
    selected: list[int] = []
    current = 0.0
    while len(selected) < min(max_oracle, m):
        best_i = -1
        best_score = current
        for i in range(m):
            if i in selected:
                continue
            score = _selection_score(doc, selected + [i], reference)
            if score > best_score:
                best_score = score
                best_i = i
        if best_i < 0:
            break
        assert best_score >= current  # greedy score never decreases
        selected.append(best_i)
        current = best_score
    if not selected:
        singles = [_selection_score(doc, [i], reference) for i in range(m)]
        selected = [int(np.argmax(singles))]
    return selected


def extract_oracle_labels(doc: Document, max_oracle: int = 3) -> list[int]:
    labels = [0] * len(doc.sentences)
    for i in greedy_oracle_selection(doc, max_oracle):
        labels[i] = 1
    return labels


def label_corpus(corpus: Corpus, max_oracle: int = 3) -> Corpus:
    for doc in corpus:
        doc.oracle_labels = extract_oracle_labels(doc, max_oracle)
    return corpus

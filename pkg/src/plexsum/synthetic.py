"""Synthetic corpora with planted summary sentences.

Planted sentences draw from a dedicated word pool and the reference summary
repeats them verbatim, so greedy labeling recovers them exactly and a small
model can overfit the corpus. Usable as a library and as a tiny generator:

    python -m plexsum.synthetic --out toy.jsonl --docs 20 --seed 7
"""

from __future__ import annotations

import argparse

from numpy.random import Generator, default_rng

from .corpus import Corpus, Document, Sentence, Token, save_corpus


def _sample_sentence(rng: Generator, pool: list[str], lo: int, hi: int) -> Sentence:
    n = int(rng.integers(lo, hi + 1))
    surfaces = [pool[int(i)] for i in rng.integers(0, len(pool), size=n)]
    edges = [(i, i + 1) for i in range(n - 1)]
    return Sentence([Token(s) for s in surfaces], edges)


def _trigrams(sent: Sentence) -> set[tuple[str, ...]]:
    toks = sent.surfaces()
    return {tuple(toks[i:i + 3]) for i in range(len(toks) - 2)}


def make_synthetic_corpus(n_docs: int = 20, seed: int = 7, n_oracle: int = 2,
                          sentences_lo: int = 4, sentences_hi: int = 6,
                          tokens_lo: int = 4, tokens_hi: int = 7,
                          summary_words: int = 12, filler_words: int = 30,
                          ) -> tuple[Corpus, dict[str, list[int]]]:
    """Build a corpus plus the planted oracle indices per document id.

    Planted sentences never share a trigram with each other (so trigram
    blocking cannot knock one out) and fillers share no words with the
    summary pool.
    """
    rng = default_rng(seed)
    summary_pool = [f"key{i:02d}" for i in range(summary_words)]
    filler_pool = [f"filler{i:02d}" for i in range(filler_words)]
    docs = []
    planted: dict[str, list[int]] = {}
    for d in range(n_docs):
        m = int(rng.integers(sentences_lo, sentences_hi + 1))
        oracle_positions = sorted(rng.choice(m, size=min(n_oracle, m), replace=False).tolist())
        oracle_sents: list[Sentence] = []
        while len(oracle_sents) < len(oracle_positions):
            cand = _sample_sentence(rng, summary_pool, tokens_lo, tokens_hi)
            if all(not (_trigrams(cand) & _trigrams(prev)) for prev in oracle_sents):
                oracle_sents.append(cand)
        sentences = []
        oracle_iter = iter(oracle_sents)
        for i in range(m):
            if i in oracle_positions:
                sentences.append(next(oracle_iter))
            else:
                sentences.append(_sample_sentence(rng, filler_pool, tokens_lo, tokens_hi))
        summary = [sentences[i].surfaces() for i in oracle_positions]
        doc_id = f"synth-{d:03d}"
        docs.append(Document(doc_id, sentences, summary))
        planted[doc_id] = oracle_positions
    return Corpus(docs), planted


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m plexsum.synthetic",
        description="Write a synthetic corpus with planted summary sentences.",
    )
    parser.add_argument("--out", required=True, help="output corpus JSONL path")
    parser.add_argument("--docs", type=int, default=20, help="number of documents (default 20)")
    parser.add_argument("--seed", type=int, default=7, help="RNG seed (default 7)")
    parser.add_argument("--oracle-sentences", type=int, default=2,
                        help="planted summary sentences per document (default 2)")
    args = parser.parse_args(argv)
    corpus, _ = make_synthetic_corpus(n_docs=args.docs, seed=args.seed,
                                      n_oracle=args.oracle_sentences)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} documents to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Independent test oracles and generators.

Everything here is deliberately written from the definitions (naive
enumeration, list scans, power iteration) rather than calling back into the
library, so the tests check two independent routes to the same answer.
"""

from __future__ import annotations

import numpy as np

from plexsum.corpus import Document, Sentence, Token


# --- brute-force ROUGE ------------------------------------------------------


def brute_ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def brute_rouge_n(cand, ref, n):
    cgrams = brute_ngrams(cand, n)
    rgrams = brute_ngrams(ref, n)
    remaining = list(rgrams)
    overlap = 0
    for gram in cgrams:
        if gram in remaining:
            remaining.remove(gram)
            overlap += 1
    p = overlap / len(cgrams) if cgrams else 0.0
    r = overlap / len(rgrams) if rgrams else 0.0
    f = 0.0 if p + r == 0.0 else 2 * p * r / (p + r)
    return p, r, f


def brute_lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


# --- brute-force summary selection ------------------------------------------


def brute_select(scores, sentences_tokens, k, blocking):
    """Literal restatement of the selection rule: descending score with
    lowest-index ties, skip on any shared trigram, stop at k, sort."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    chosen = []
    for idx in order:
        toks = sentences_tokens[idx]
        tris = [tuple(toks[i:i + 3]) for i in range(len(toks) - 2)]
        if blocking:
            clash = False
            for j in chosen:
                jtoks = sentences_tokens[j]
                jtris = [tuple(jtoks[i:i + 3]) for i in range(len(jtoks) - 2)]
                if any(t in jtris for t in tris):
                    clash = True
                    break
            if clash:
                continue
        chosen.append(idx)
        if len(chosen) == k:
            break
    return sorted(chosen)


# --- greedy-oracle twin --------------------------------------------------------


def oracle_step_score(doc, indices):
    cand = []
    for i in sorted(indices):
        cand.extend(doc.sentences[i].surfaces())
    ref = doc.reference_tokens()
    return 0.5 * (brute_rouge_n(cand, ref, 1)[2] + brute_rouge_n(cand, ref, 2)[2])


def brute_greedy_selection(doc, max_oracle):
    """Step-by-step exhaustive argmax twin of the greedy oracle."""
    m = len(doc.sentences)
    selected = []
    current = 0.0
    while len(selected) < min(max_oracle, m):
        scores = [
            oracle_step_score(doc, selected + [i]) if i not in selected else -1.0
            for i in range(m)
        ]
        best = int(np.argmax(scores))
        if scores[best] <= current:
            break
        selected.append(best)
        current = scores[best]
    if not selected:
        selected = [int(np.argmax([oracle_step_score(doc, [i]) for i in range(m)]))]
    return selected


# --- spectral radius ---------------------------------------------------------


def power_iteration_radius(a, iterations=2000):
    rng = np.random.default_rng(0)
    radius = 0.0
    for _ in range(3):  # a few starts to dodge unlucky orthogonal init
        v = rng.normal(size=a.shape[0])
        v /= np.linalg.norm(v)
        for _ in range(iterations):
            w = a @ v
            norm = np.linalg.norm(w)
            if norm == 0.0:
                break
            v = w / norm
        radius = max(radius, float(np.abs(v @ a @ v)))
    return radius


# --- random inputs -----------------------------------------------------------


WORDS = [f"tok{i:02d}" for i in range(14)]


def random_tokens(rng, max_len=10, alphabet=6):
    n = int(rng.integers(0, max_len + 1))
    return [WORDS[int(i)] for i in rng.integers(0, alphabet, size=n)]


def random_sentence(rng, lo=1, hi=8, alphabet=10):
    n = int(rng.integers(lo, hi + 1))
    toks = [Token(WORDS[int(i)]) for i in rng.integers(0, alphabet, size=n)]
    edges = [(i, i + 1) for i in range(n - 1)]
    return Sentence(toks, edges)


def random_document(rng, doc_id="doc", m_lo=1, m_hi=6, summary_sentences=1):
    m = int(rng.integers(m_lo, m_hi + 1))
    sentences = [random_sentence(rng) for _ in range(m)]
    summary = [random_tokens(rng, max_len=8, alphabet=10) or ["tok00"]
               for _ in range(summary_sentences)]
    return Document(doc_id, sentences, summary)


def random_symmetric_nonneg(rng, n):
    a = rng.random((n, n))
    a = (a + a.T) / 2.0
    np.fill_diagonal(a, 0.0)
    return a

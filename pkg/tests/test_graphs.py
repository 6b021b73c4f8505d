import numpy as np
import pytest

from helpers import power_iteration_radius, random_symmetric_nonneg
from plexsum.corpus import Corpus, Document, Sentence, Token, Vocabulary
from plexsum.graphs import (
    TfidfModel,
    build_natural_connection_graph,
    build_semantic_graph,
    build_syntactic_graph,
    fit_tfidf,
    is_punctuation,
    load_stopwords,
    natural_connection_from_vectors,
    normalize_adjacency,
    sentence_tfidf,
)


def _assert_valid_adjacency(a):
    assert np.array_equal(a, a.T)
    assert np.all(a >= 0)
    assert np.all(np.isfinite(a))


# --- syntactic ----------------------------------------------------------------


def test_syntactic_hand_case():
    a = build_syntactic_graph(3, [(0, 1), (1, 2)])
    expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    assert np.array_equal(a, expected)


def test_syntactic_no_edges():
    assert np.array_equal(build_syntactic_graph(2, []), np.zeros((2, 2)))


def test_syntactic_duplicate_edges_stay_binary():
    a = build_syntactic_graph(2, [(0, 1), (0, 1), (1, 0)])
    assert a[0, 1] == 1.0 and a[1, 0] == 1.0


def test_syntactic_rejects_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        build_syntactic_graph(2, [(0, 2)])


def test_syntactic_rejects_self_edge():
    with pytest.raises(ValueError, match="self-edge"):
        build_syntactic_graph(2, [(1, 1)])


# --- semantic -----------------------------------------------------------------


def test_semantic_orthonormal_rows():
    assert np.array_equal(build_semantic_graph(np.eye(2)), np.eye(2))


def test_semantic_hand_case():
    a = build_semantic_graph(np.array([[1.0, 1.0], [1.0, -1.0]]))
    assert np.array_equal(a, np.array([[2.0, 0.0], [0.0, 2.0]]))


def test_semantic_diagonal_is_squared_norm(rng):
    x = rng.normal(size=(5, 3))
    a = build_semantic_graph(x)
    assert np.allclose(np.diag(a), np.sum(x * x, axis=1))


def test_semantic_permutation_equivariance_exact(rng):
    for _ in range(200):
        n, d = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        x = rng.normal(size=(n, d))
        perm = rng.permutation(n)
        p = np.eye(n)[perm]
        assert np.array_equal(build_semantic_graph(p @ x), p @ build_semantic_graph(x) @ p.T)


def test_semantic_rejects_nonfinite():
    with pytest.raises(ValueError):
        build_semantic_graph(np.array([[np.nan, 0.0]]))


# --- normalization --------------------------------------------------------------


def test_normalize_zero_matrix_gives_identity():
    assert np.array_equal(normalize_adjacency(np.zeros((2, 2))), np.eye(2))


def test_normalize_hand_case():
    a = normalize_adjacency(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(a, 0.5 * np.ones((2, 2)), atol=1e-15)


def test_normalize_regular_graph_rows_sum_to_one():
    # ring of 4 nodes: every node has degree 2, so rows of A+I all sum to 3
    ring = np.array([
        [0, 1, 0, 1],
        [1, 0, 1, 0],
        [0, 1, 0, 1],
        [1, 0, 1, 0],
    ], dtype=float)
    assert np.allclose(normalize_adjacency(ring).sum(axis=1), 1.0, atol=1e-12)


def test_normalize_preserves_symmetry_exactly(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        a = random_symmetric_nonneg(rng, n)
        out = normalize_adjacency(a)
        assert np.array_equal(out, out.T)


def test_normalize_spectral_radius_at_most_one(rng):
    for _ in range(50):
        n = int(rng.integers(2, 9))
        a = random_symmetric_nonneg(rng, n)
        radius = power_iteration_radius(normalize_adjacency(a))
        assert radius <= 1.0 + 1e-9


def test_normalize_rejects_negative():
    with pytest.raises(ValueError):
        normalize_adjacency(np.array([[0.0, -1.0], [-1.0, 0.0]]))


# --- tfidf ------------------------------------------------------------------------


def _mini_corpus():
    def doc(doc_id, sentences):
        return Document(
            doc_id,
            [Sentence([Token(t) for t in toks], []) for toks in sentences],
            [["x"]],
        )

    corpus = Corpus([
        doc("d0", [["city", "the", "wins"], ["big", "game", "."]]),
        doc("d1", [["city", "the", "parade"]]),
        doc("d2", [["quiet", "day", "."]]),
    ])
    vocab_words = ["<unk>", "city", "the", "wins", "big", "game", ".", "parade", "quiet", "day"]
    vocab = Vocabulary(vocab_words, max_size=50)
    corpus.index_with(vocab)
    return corpus, vocab


def test_fit_tfidf_document_frequency():
    corpus, vocab = _mini_corpus()
    model = fit_tfidf(corpus, vocab, min_df=2, stopwords=frozenset({"the"}))
    assert model.df[vocab.id_of("city")] == 2
    assert model.n_docs == 3


def test_fit_tfidf_excludes_stopwords_punctuation_and_unknown():
    corpus, vocab = _mini_corpus()
    model = fit_tfidf(corpus, vocab, min_df=1, stopwords=frozenset({"the"}))
    assert vocab.id_of("the") not in model.df
    assert vocab.id_of(".") not in model.df
    assert 0 not in model.df


def test_fit_tfidf_min_df_floor():
    corpus, vocab = _mini_corpus()
    model = fit_tfidf(corpus, vocab, min_df=3, stopwords=frozenset())
    assert model.df == {}  # nothing appears in all three documents


def test_default_min_df_is_100_in_model_config():
    from plexsum.model import ModelConfig

    assert ModelConfig().min_df == 100


def test_sentence_tfidf_formula():
    model = TfidfModel(n_docs=8, min_df=1, df={5: 2})
    sent = Sentence([Token("w", 5), Token("w", 5), Token("q", 3)], [])
    scores = sentence_tfidf(sent, model)
    assert scores == {5: pytest.approx(2 * np.log(4.0), abs=1e-12)}


def test_sentence_tfidf_df_equals_n_docs_gives_zero():
    model = TfidfModel(n_docs=4, min_df=1, df={5: 4})
    sent = Sentence([Token("w", 5)], [])
    assert sentence_tfidf(sent, model)[5] == 0.0


def test_sentence_tfidf_absent_keyword_not_in_map():
    model = TfidfModel(n_docs=4, min_df=1, df={5: 2})
    sent = Sentence([Token("q", 3)], [])
    assert sentence_tfidf(sent, model) == {}


def test_is_punctuation():
    assert is_punctuation(".") and is_punctuation("...") and is_punctuation("?!")
    assert not is_punctuation("a.") and not is_punctuation("3")


def test_stopword_list_loads():
    stopwords = load_stopwords()
    assert "the" in stopwords and "of" in stopwords
    assert len(stopwords) > 100


def test_custom_stopword_file(tmp_path):
    from plexsum.graphs import read_stopword_file

    path = tmp_path / "stop.txt"
    path.write_text("city\ngame\n\n", encoding="utf-8")
    stopwords = read_stopword_file(path)
    assert stopwords == frozenset({"city", "game"})
    corpus, vocab = _mini_corpus()
    model = fit_tfidf(corpus, vocab, min_df=1, stopwords=stopwords)
    assert vocab.id_of("city") not in model.df
    assert vocab.id_of("parade") in model.df


# --- natural connection -----------------------------------------------------------


def test_natural_connection_pairwise_product():
    a = natural_connection_from_vectors([{7: 0.5}, {7: 0.4}])
    assert a[0, 1] == 0.2 and a[1, 0] == 0.2
    assert a[0, 0] == 0.0 and a[1, 1] == 0.0


def test_natural_connection_no_shared_keywords():
    a = natural_connection_from_vectors([{1: 0.5}, {2: 0.4}])
    assert np.array_equal(a, np.zeros((2, 2)))


def _random_tfidf_world(rng):
    n_words = 8
    vocab = Vocabulary(["<unk>"] + [f"w{i}" for i in range(n_words)], max_size=50)
    m = int(rng.integers(1, 7))
    sentences = []
    for _ in range(m):
        n = int(rng.integers(1, 7))
        ids = rng.integers(1, n_words + 1, size=n)
        sentences.append(Sentence([Token(vocab.word_of(int(i)), int(i)) for i in ids], []))
    doc = Document("d", sentences, [["w0"]])
    df = {i: int(rng.integers(1, 5)) for i in range(1, n_words + 1) if rng.random() < 0.8}
    model = TfidfModel(n_docs=6, min_df=1, df=df)
    return doc, model


def test_natural_connection_matches_gram_matrix_oracle(rng):
    for _ in range(300):
        doc, model = _random_tfidf_world(rng)
        a = build_natural_connection_graph(doc, model)
        # oracle: dense sentence x keyword matrix, G G^T with zeroed diagonal
        keywords = sorted(model.df)
        g = np.zeros((len(doc.sentences), len(keywords)))
        for i, sent in enumerate(doc.sentences):
            vec = sentence_tfidf(sent, model)
            for j, k in enumerate(keywords):
                g[i, j] = vec.get(k, 0.0)
        oracle = g @ g.T
        np.fill_diagonal(oracle, 0.0)
        assert np.max(np.abs(a - oracle)) <= 1e-12
        _assert_valid_adjacency(a)


def test_natural_connection_invariant_to_token_order(rng):
    for _ in range(50):
        doc, model = _random_tfidf_world(rng)
        a = build_natural_connection_graph(doc, model)
        for sent in doc.sentences:
            rng.shuffle(sent.tokens)
        b = build_natural_connection_graph(doc, model)
        assert np.array_equal(a, b)


# --- joint invariant sweep ----------------------------------------------------------


def test_all_builders_produce_valid_adjacency(rng):
    for _ in range(250):
        n = int(rng.integers(1, 8))
        edges = []
        if n > 1:
            for _ in range(int(rng.integers(0, n * 2))):
                i, j = rng.choice(n, size=2, replace=False)
                edges.append((int(i), int(j)))
        _assert_valid_adjacency(build_syntactic_graph(n, edges))
        _assert_valid_adjacency(build_semantic_graph(rng.normal(size=(n, 4))))
        doc, model = _random_tfidf_world(rng)
        _assert_valid_adjacency(build_natural_connection_graph(doc, model))
        _assert_valid_adjacency(normalize_adjacency(random_symmetric_nonneg(rng, n)))

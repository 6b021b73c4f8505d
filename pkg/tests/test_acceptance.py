"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured numbers (run with `pytest tests/test_acceptance.py -v -s`)."""

import csv
import time

import numpy as np

from helpers import (
    brute_greedy_selection,
    brute_rouge_n,
    brute_select,
    random_document,
    random_sentence,
    random_symmetric_nonneg,
)
from plexsum.autodiff import Tensor
from plexsum.cli import main as cli_main
from plexsum.corpus import Document, Sentence, Token, Vocabulary, greedy_oracle_selection
from plexsum.graphs import (
    TfidfModel,
    build_natural_connection_graph,
    build_semantic_graph,
    build_syntactic_graph,
    normalize_adjacency,
    sentence_tfidf,
)
from plexsum.layers import init_multi_gcn, multi_gcn, normalize_adjacency_t, semantic_adjacency
from plexsum.model import ModelConfig, forward, select_summary
from plexsum.rouge import rouge_l, rouge_n
from plexsum.synthetic import make_synthetic_corpus
from plexsum.trainer import (
    TrainingConfig,
    evaluate,
    grad_check_model,
    load_checkpoint,
    run_ablation,
    train,
)


def test_criterion_01_gradient_correctness():
    t0 = time.time()
    report = grad_check_model(seed=7, d=16, h=1e-5, samples_per_tensor=8)
    elapsed = time.time() - t0
    groups: dict[str, float] = {}
    for name, err in report.items():
        group = name.split(".", 1)[0]
        groups[group] = max(groups.get(group, 0.0), err)
    assert set(groups) == {"word", "sentence", "selector"}
    for group, err in groups.items():
        assert err < 1e-3, f"group {group}: {err:.3e}"
    assert elapsed < 60.0
    print(f"\n[criterion 1] PASS gradient check: max rel err "
          f"{max(report.values()):.3e} across {len(report)} tensors "
          f"(groups: {', '.join(f'{g}={e:.1e}' for g, e in sorted(groups.items()))}) "
          f"in {elapsed:.1f}s")


def test_criterion_02_zero_weight_collapse():
    checked = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        # word-style block: syntactic + semantic relations over token states
        n = int(rng.integers(1, 7))
        d = 2 * int(rng.integers(2, 9))
        x = Tensor(rng.normal(size=(n, d)))
        edges = [(i, i + 1) for i in range(n - 1)]
        word_adj = {
            "syntactic": Tensor(normalize_adjacency(build_syntactic_graph(n, edges))),
            "semantic": normalize_adjacency_t(semantic_adjacency(x)),
        }
        params = init_multi_gcn(rng, d, ["syntactic", "semantic"], 2)
        params.w_fuse.data[:] = 0.0
        params.b_fuse.data[:] = 0.0
        out = multi_gcn(x, word_adj, params)
        assert np.array_equal(out.data, x.data)
        # sentence-style block: semantic + natural relations over sentence states
        m = int(rng.integers(1, 6))
        xs = Tensor(rng.normal(size=(m, d)))
        nat = random_symmetric_nonneg(rng, m)
        sent_adj = {
            "semantic": normalize_adjacency_t(semantic_adjacency(xs)),
            "natural": Tensor(normalize_adjacency(nat)),
        }
        sparams = init_multi_gcn(rng, d, ["semantic", "natural"], 2)
        sparams.w_fuse.data[:] = 0.0
        sparams.b_fuse.data[:] = 0.0
        sout = multi_gcn(xs, sent_adj, sparams)
        assert np.array_equal(sout.data, xs.data)
        checked += 1
    print(f"\n[criterion 2] PASS zero-fusion collapse: bit-identical input "
          f"round-trip for word and sentence blocks on {checked} seeds")


def _random_tfidf_doc(rng):
    vocab = Vocabulary(["<unk>"] + [f"w{i}" for i in range(8)], max_size=50)
    m = int(rng.integers(1, 7))
    sentences = []
    for _ in range(m):
        n = int(rng.integers(1, 7))
        ids = rng.integers(1, 9, size=n)
        sentences.append(Sentence([Token(vocab.word_of(int(i)), int(i)) for i in ids], []))
    doc = Document("d", sentences, [["w0"]])
    df = {i: int(rng.integers(1, 5)) for i in range(1, 9) if rng.random() < 0.8}
    return doc, TfidfModel(n_docs=6, min_df=1, df=df)


def test_criterion_03_graph_invariant_suite():
    rng = np.random.default_rng(33)
    worst_nat = 0.0
    for trial in range(1000):
        n = int(rng.integers(1, 8))
        edges = []
        if n > 1:
            for _ in range(int(rng.integers(0, 2 * n))):
                i, j = rng.choice(n, size=2, replace=False)
                edges.append((int(i), int(j)))
        outputs = [build_syntactic_graph(n, edges)]
        x = rng.normal(size=(n, int(rng.integers(2, 7))))
        outputs.append(build_semantic_graph(x))
        doc, model = _random_tfidf_doc(rng)
        nat = build_natural_connection_graph(doc, model)
        outputs.append(nat)
        outputs.append(normalize_adjacency(random_symmetric_nonneg(rng, n)))
        for a in outputs:
            assert np.array_equal(a, a.T)
            assert np.all(a >= 0.0)
            assert np.all(np.isfinite(a))
        # semantic permutation equivariance, exact
        perm = rng.permutation(n)
        p = np.eye(n)[perm]
        assert np.array_equal(build_semantic_graph(p @ x),
                              p @ build_semantic_graph(x) @ p.T)
        # natural graph against the dense Gram-matrix oracle
        keywords = sorted(model.df)
        g = np.zeros((len(doc.sentences), len(keywords)))
        for i, sent in enumerate(doc.sentences):
            vec = sentence_tfidf(sent, model)
            for j, k in enumerate(keywords):
                g[i, j] = vec.get(k, 0.0)
        oracle = g @ g.T
        np.fill_diagonal(oracle, 0.0)
        gap = float(np.max(np.abs(nat - oracle))) if nat.size else 0.0
        worst_nat = max(worst_nat, gap)
        assert gap <= 1e-12
    print(f"\n[criterion 3] PASS graph invariants on 1000 random inputs; semantic "
          f"equivariance exact; natural-vs-Gram gap {worst_nat:.2e} <= 1e-12")


def test_criterion_04_rouge_oracle_equivalence():
    hand = [
        (rouge_n(["the", "cat", "sat"], ["the", "cat", "ran"], 1).f1, 2 / 3),
        (rouge_n(["the", "cat", "sat"], ["the", "cat", "ran"], 2).f1, 1 / 2),
        (rouge_l(["a", "b", "c", "d"], ["a", "c", "b", "d"]).f1, 0.75),
    ]
    for got, want in hand:
        assert abs(got - want) <= 1e-12
    rng = np.random.default_rng(44)
    words = [f"t{i}" for i in range(6)]
    for _ in range(1000):
        a = [words[int(i)] for i in rng.integers(0, 6, size=int(rng.integers(0, 11)))]
        b = [words[int(i)] for i in rng.integers(0, 6, size=int(rng.integers(0, 11)))]
        n = int(rng.integers(1, 4))
        p, r, f = brute_rouge_n(a, b, n)
        got = rouge_n(a, b, n)
        assert got.precision == p and got.recall == r and got.f1 == f
    print("\n[criterion 4] PASS rouge_n == brute-force enumerator on 1000 pairs "
          "(exact); hand cases within 1e-12")


def test_criterion_05_trigram_blocking():
    from plexsum.model import sentence_trigrams

    rng = np.random.default_rng(55)
    for _ in range(1000):
        m = int(rng.integers(1, 9))
        sentences = [random_sentence(rng, lo=1, hi=6, alphabet=4) for _ in range(m)]
        doc = Document("d", sentences, [["tok00"]])
        scores = np.round(rng.random(m), 2)
        k = int(rng.integers(1, m + 1))
        blocking = bool(rng.integers(0, 2))
        got = select_summary(scores, doc, k, blocking)
        want = brute_select(scores, [s.surfaces() for s in sentences], k, blocking)
        assert got == want
        if blocking:
            for a_i, a in enumerate(got):
                for b in got[a_i + 1:]:
                    assert not (sentence_trigrams(sentences[a]) & sentence_trigrams(sentences[b]))
    print("\n[criterion 5] PASS selection == brute-force rule on 1000 instances; "
          "no trigram shared between selected sentences")


def test_criterion_06_overfit(overfit_world):
    world = overfit_world
    assert world["train_config"].epochs <= 200
    assert world["train_config"].lr == 0.0005
    assert world["config"].d == 32
    with open(world["out_dir"] / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    losses = [float(r["loss"]) for r in rows if r["split"] == "train"]
    final_loss = losses[-1]
    assert final_loss < 0.1
    assert world["train_seconds"] < 600.0
    loaded = load_checkpoint(world["checkpoint"])
    exact = 0
    for doc in world["corpus"]:
        scores = forward(doc, loaded.emb, loaded.params, loaded.config, loaded.tfidf).data
        selected = select_summary(scores, doc, k=2, blocking=True)
        oracle = [i for i, l in enumerate(doc.oracle_labels) if l]
        exact += (selected == oracle)
    ratio = exact / len(world["corpus"])
    assert ratio >= 0.9
    print(f"\n[criterion 6] PASS overfit: loss {final_loss:.4f} < 0.1 after "
          f"{len(losses)} epochs; exact oracle set on {exact}/{len(world['corpus'])} "
          f"docs; trained in {world['train_seconds']:.0f}s")


def test_criterion_07_greedy_oracle_per_step():
    rng = np.random.default_rng(77)
    for trial in range(200):
        doc = random_document(rng, doc_id=f"d{trial}", m_lo=1, m_hi=6,
                              summary_sentences=int(rng.integers(1, 3)))
        got = greedy_oracle_selection(doc, max_oracle=3)
        want = brute_greedy_selection(doc, max_oracle=3)
        assert got == want, f"doc {trial}: {got} != {want}"
    print("\n[criterion 7] PASS greedy oracle matches per-step exhaustive argmax "
          "on 200 random documents (M <= 6)")


def test_criterion_08_determinism(tmp_path):
    corpus, _ = make_synthetic_corpus(n_docs=6, seed=9)
    from plexsum.corpus import build_vocabulary, label_corpus, random_embeddings
    from plexsum.graphs import fit_tfidf
    from plexsum.trainer import make_embedding_source

    label_corpus(corpus, max_oracle=2)
    vocab = build_vocabulary(corpus, max_size=100)
    corpus.index_with(vocab)
    tfidf = fit_tfidf(corpus, vocab, min_df=2, stopwords=frozenset())
    config = ModelConfig(d=8, d_emb=8, vocab_size=len(vocab), k=2, min_df=2).validate()
    emb = random_embeddings(len(vocab), 8, seed=4)
    emb_source = make_embedding_source("random", seed=4, d_emb=8, vocab_size=len(vocab))
    tc = TrainingConfig(lr=0.0005, epochs=3, seed=17)
    ckpt_a = train(corpus, config, tc, emb, tfidf, emb_source, vocab, tmp_path / "a")
    ckpt_b = train(corpus, config, tc, emb, tfidf, emb_source, vocab, tmp_path / "b")
    assert ckpt_a.read_bytes() == ckpt_b.read_bytes()
    la, lb = load_checkpoint(ckpt_a), load_checkpoint(ckpt_b)
    rep_a = evaluate(corpus, la.emb, la.params, la.config, la.tfidf)
    rep_b = evaluate(corpus, lb.emb, lb.params, lb.config, lb.tfidf)
    assert rep_a.to_dict() == rep_b.to_dict()
    print("\n[criterion 8] PASS determinism: identical seeds give byte-identical "
          "checkpoints and identical evaluation reports")


def test_criterion_09_structural_ablation(overfit_world, tmp_path):
    # Full-scale reference scores (R-1 43.16 / R-2 20.14 / R-L 39.49 and the
    # ablation deltas) need 287k training documents and are explicitly not
    # reproduced here; the contract is the structural effect of each toggle.
    world = overfit_world
    rows = run_ablation(world["corpus"], world["config"], world["train_config"],
                        world["emb"], world["tfidf"], world["emb_source"], world["vocab"],
                        tmp_path, do_train=False)
    byname = {r.name: r for r in rows}
    assert all(r.structural_ok for r in rows), [r.name for r in rows if not r.structural_ok]
    d, layers = world["config"].d, world["config"].gcn_layers
    branch_delta = layers * (2 * d * d + d) + d * d
    relation_rows = ["-word-semantic-relation", "-syntactic-relation",
                     "-sentence-semantic-relation", "-natural-connection-relation"]
    for name in relation_rows:
        assert byname[name].delta_vs_full == branch_delta
        assert byname[name].analytic_delta == branch_delta
    assert byname["-contextual-information"].delta_vs_full == 3 * d * d + d
    for name in ("-trigram-blocking", "-outer-skip", "-inner-skip",
                 "-natural-connection-weights"):
        assert byname[name].delta_vs_full == 0

    # each toggle changes the computation graph as specified
    rng = np.random.default_rng(99)
    x = Tensor(rng.normal(size=(3, d)))
    adj = {"r": Tensor(normalize_adjacency(random_symmetric_nonneg(rng, 3)))}
    params = init_multi_gcn(rng, d, ["r"], layers)
    params.w_fuse.data[:] = 0.0
    params.b_fuse.data[:] = 0.0
    assert np.array_equal(multi_gcn(x, adj, params, outer_skip=True).data, x.data)
    assert np.array_equal(multi_gcn(x, adj, params, outer_skip=False).data,
                          np.zeros((3, d)))
    live = init_multi_gcn(rng, d, ["r"], layers)
    assert not np.allclose(multi_gcn(x, adj, live, inner_skip=True).data,
                           multi_gcn(x, adj, live, inner_skip=False).data)
    print(f"\n[criterion 9] PASS structural ablation: relation delta "
          f"{branch_delta} params (exact, all variants), toggles alter the "
          f"computation as specified; paper-scale score deltas out of scope")


def test_criterion_10_k_sweep(overfit_world, tmp_path):
    world = overfit_world
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        code = cli_main(["sweep-k", "--corpus", str(world["corpus_path"]),
                         "--checkpoint", str(world["checkpoint"]),
                         "--k-max", "5", "--out-dir", str(out)])
        assert code == 0
    assert (out_a / "sweep_k.csv").read_bytes() == (out_b / "sweep_k.csv").read_bytes()
    assert (out_a / "sweep_k.png").exists()
    lines = (out_a / "sweep_k.csv").read_text().splitlines()
    assert lines[0] == "k,r1,r2,rl"
    rows = [line.split(",") for line in lines[1:]]
    assert [int(r[0]) for r in rows] == [1, 2, 3, 4, 5]
    r1 = [float(r[1]) for r in rows]
    peak = int(np.argmax(r1))
    assert all(r1[i] <= r1[i + 1] + 1e-9 for i in range(peak))          # rises to the cap
    assert all(r1[i] >= r1[i + 1] - 1e-9 for i in range(peak, len(r1) - 1))  # then never rises
    print(f"\n[criterion 10] PASS deterministic K sweep, R-1 curve "
          f"{[round(v, 4) for v in r1]} capped at K={rows[peak][0]}")

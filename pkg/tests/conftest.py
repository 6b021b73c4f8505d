import numpy as np
import pytest

from plexsum.corpus import build_vocabulary, label_corpus, random_embeddings, save_corpus
from plexsum.graphs import fit_tfidf
from plexsum.model import ModelConfig
from plexsum.synthetic import make_synthetic_corpus
from plexsum.trainer import TrainingConfig, make_embedding_source, train


@pytest.fixture(scope="session")
def overfit_world(tmp_path_factory):
    """The 20-document planted-oracle corpus, trained to convergence once and
    shared by the trainer/acceptance tests."""
    corpus, planted = make_synthetic_corpus(n_docs=20, seed=7)
    label_corpus(corpus, max_oracle=2)
    vocab = build_vocabulary(corpus, max_size=100)
    corpus.index_with(vocab)
    tfidf = fit_tfidf(corpus, vocab, min_df=2, stopwords=frozenset())
    config = ModelConfig(d=32, d_emb=32, vocab_size=len(vocab), k=2, min_df=2).validate()
    emb = random_embeddings(len(vocab), 32, seed=13)
    emb_source = make_embedding_source("random", seed=13, d_emb=32, vocab_size=len(vocab))
    train_config = TrainingConfig(lr=0.0005, epochs=200, batch_size=1, seed=13,
                                  stop_loss=0.05)
    out_dir = tmp_path_factory.mktemp("overfit")
    corpus_path = out_dir / "labeled.jsonl"
    save_corpus(corpus, corpus_path)
    import time

    t0 = time.time()
    ckpt_path = train(corpus, config, train_config, emb, tfidf, emb_source, vocab, out_dir)
    train_seconds = time.time() - t0
    return {
        "corpus": corpus,
        "corpus_path": corpus_path,
        "planted": planted,
        "vocab": vocab,
        "tfidf": tfidf,
        "config": config,
        "emb": emb,
        "emb_source": emb_source,
        "train_config": train_config,
        "checkpoint": ckpt_path,
        "out_dir": out_dir,
        "train_seconds": train_seconds,
    }


@pytest.fixture()
def rng():
    return np.random.default_rng(0)

"""Multiplex-graph extractive summarizer: multi-relation graph encoders over
words and sentences, a reading/post-reading selector, and the full training
pipeline (oracle labels, ROUGE, autodiff, Adam, CLI)."""

from .autodiff import Adam, Tape, Tensor, grad_check, grad_check_report
from .corpus import (
    Corpus,
    Document,
    EmbeddingTable,
    Sentence,
    Token,
    Vocabulary,
    build_vocabulary,
    extract_oracle_labels,
    greedy_oracle_selection,
    label_corpus,
    load_corpus,
    load_embeddings,
    random_embeddings,
    save_corpus,
    tokenize,
    truncate_corpus,
    truncate_document,
)
from .graphs import (
    TfidfModel,
    build_natural_connection_graph,
    build_semantic_graph,
    build_syntactic_graph,
    fit_tfidf,
    load_stopwords,
    normalize_adjacency,
    sentence_tfidf,
)
from .model import (
    ModelConfig,
    ModelParams,
    bce_loss,
    count_parameters,
    expected_param_count,
    forward,
    init_model_params,
    named_parameters,
    select_summary,
)
from .rouge import RougeScore, lcs_length, rouge_l, rouge_n
from .trainer import (
    EvalReport,
    TrainingConfig,
    evaluate,
    grad_check_model,
    load_checkpoint,
    run_ablation,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

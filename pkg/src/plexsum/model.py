"""The end-to-end summarizer: a word block and a sentence block (each
"encode - multi-relation graph convolution - max-pool readout") feeding a
two-stage reading/post-reading sentence selector.

Word-level relations: syntactic (dependency links) and semantic (absolute
dot products of contextualized embeddings). Sentence-level relations:
semantic and natural connection (shared-keyword tfidf products). Semantic
graphs are built from the encoder's own outputs once per block and held
fixed through the stack.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import autodiff as ad
from . import graphs
from .autodiff import Tensor
from .corpus import Document, EmbeddingTable, Sentence
from .graphs import TfidfModel
from .layers import (
    BiLstmParams,
    MultiGcnParams,
    bilstm,
    init_bilstm,
    init_multi_gcn,
    multi_gcn,
    named_bilstm,
    named_multi_gcn,
    normalize_adjacency_t,
    semantic_adjacency,
)


@dataclass
class ModelConfig:
    d: int = 300
    d_emb: int = 300
    vocab_size: int = 50_000
    lstm_layers: int = 2
    gcn_layers: int = 2
    use_syntactic: bool = True
    use_word_semantic: bool = True
    use_sentence_semantic: bool = True
    use_natural: bool = True
    contextual_info: bool = True
    trigram_blocking: bool = True
    inner_skip: bool = True
    outer_skip: bool = True
    natural_weights: bool = True
    detach_semantic_graph: bool = False
    semantic_threshold: float = 0.0
    k: int = 3
    min_df: int = 100
    max_sentences: int = 100
    max_tokens: int = 100
    forget_bias: float = 1.0

    def validate(self) -> "ModelConfig":
        if self.d % 2:
            raise ValueError(f"hidden width d must be even, got {self.d}")
        if self.d < 2 or self.d_emb < 1:
            raise ValueError("hidden and embedding widths must be positive")
        if not (self.use_syntactic or self.use_word_semantic):
            raise ValueError("at least one word-level relation must be enabled")
        if not (self.use_sentence_semantic or self.use_natural):
            raise ValueError("at least one sentence-level relation must be enabled")
        if self.lstm_layers < 1 or self.gcn_layers < 1:
            raise ValueError("layer counts must be >= 1")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.min_df < 1:
            raise ValueError(f"min_df must be >= 1, got {self.min_df}")
        return self

    def word_relations(self) -> list[str]:
        rels = []
        if self.use_syntactic:
            rels.append("syntactic")
        if self.use_word_semantic:
            rels.append("semantic")
        return rels

    def sentence_relations(self) -> list[str]:
        rels = []
        if self.use_sentence_semantic:
            rels.append("semantic")
        if self.use_natural:
            rels.append("natural")
        return rels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, blob: dict) -> "ModelConfig":
        return cls(**blob).validate()


@dataclass
class BlockParams:
    encoder: BiLstmParams
    gcn: MultiGcnParams


@dataclass
class SelectorParams:
    w_read: Tensor
    b_read: Tensor
    w_post: Tensor | None
    b_post: Tensor | None
    w_score: Tensor
    b_score: Tensor


@dataclass
class ModelParams:
    word: BlockParams
    sentence: BlockParams
    selector: SelectorParams


def init_model_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    config.validate()
    d = config.d
    word = BlockParams(
        encoder=init_bilstm(rng, config.d_emb, d, config.lstm_layers, config.forget_bias),
        gcn=init_multi_gcn(rng, d, config.word_relations(), config.gcn_layers),
    )
    sentence = BlockParams(
        encoder=init_bilstm(rng, d, d, config.lstm_layers, config.forget_bias),
        gcn=init_multi_gcn(rng, d, config.sentence_relations(), config.gcn_layers),
    )
    def _uniform(shape):
        bound = 1.0 / np.sqrt(shape[0])
        return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)
    selector = SelectorParams(
        w_read=_uniform((d, d)),
        b_read=Tensor(np.zeros(d), requires_grad=True),
        w_post=_uniform((3 * d, d)) if config.contextual_info else None,
        b_post=Tensor(np.zeros(d), requires_grad=True) if config.contextual_info else None,
        w_score=_uniform((d, 1)),
        b_score=Tensor(np.zeros(1), requires_grad=True),
    )
    return ModelParams(word, sentence, selector)


def named_parameters(params: ModelParams) -> dict[str, Tensor]:
    """Flat name -> Tensor map; names follow block.relation.layer.tensor and
    the order matches initialization order (checkpoints rely on both)."""
    out: dict[str, Tensor] = {}
    for block_name, block in (("word", params.word), ("sentence", params.sentence)):
        out.update(named_bilstm(f"{block_name}.bilstm", block.encoder))
        out.update(named_multi_gcn(f"{block_name}.gcn", block.gcn))
    sel = params.selector
    out["selector.read.w"] = sel.w_read
    out["selector.read.b"] = sel.b_read
    if sel.w_post is not None:
        out["selector.post.w"] = sel.w_post
        out["selector.post.b"] = sel.b_post
    out["selector.score.w"] = sel.w_score
    out["selector.score.b"] = sel.b_score
    return out


def count_parameters(params: ModelParams) -> int:
    return sum(t.data.size for t in named_parameters(params).values())


def expected_param_count(config: ModelConfig) -> int:
    """Closed-form parameter count from the configured shapes alone."""
    d = config.d
    h = d // 2

    def bilstm_count(d_in: int) -> int:
        total = 0
        for layer in range(config.lstm_layers):
            cur_in = d_in if layer == 0 else d
            total += 2 * (cur_in * 4 * h + h * 4 * h + 4 * h)
        return total

    def multi_gcn_count(n_relations: int) -> int:
        branch = config.gcn_layers * (d * d + d * d + d)
        return n_relations * branch + (n_relations * d * d + d)

    total = bilstm_count(config.d_emb) + multi_gcn_count(len(config.word_relations()))
    total += bilstm_count(d) + multi_gcn_count(len(config.sentence_relations()))
    total += d * d + d                                   # reading stage
    if config.contextual_info:
        total += 3 * d * d + d                           # post-reading stage
    total += d + 1                                       # scoring stage
    return total


def load_model_params(config: ModelConfig, payload: dict) -> ModelParams:
    """Rebuild a ModelParams tree from a checkpoint payload, validating that
    names and shapes match what the config dictates."""
    params = init_model_params(config, np.random.default_rng(0))
    named = named_parameters(params)
    loaded = ad.params_from_payload(payload)
    missing = set(named) - set(loaded)
    extra = set(loaded) - set(named)
    if missing or extra:
        raise ValueError(
            f"checkpoint/config mismatch: missing={sorted(missing)} unexpected={sorted(extra)}"
        )
    for name, tensor in named.items():
        if loaded[name].data.shape != tensor.data.shape:
            raise ValueError(
                f"checkpoint/config mismatch: parameter '{name}' has shape "
                f"{loaded[name].data.shape}, config expects {tensor.data.shape}"
            )
        tensor.data = loaded[name].data
    return params


# ---------------------------------------------------------------------------
# forward pass


def word_adjacencies(sentence: Sentence, x: Tensor, config: ModelConfig) -> dict[str, Tensor]:
    adj: dict[str, Tensor] = {}
    if config.use_syntactic:
        a = graphs.build_syntactic_graph(len(sentence.tokens), sentence.dep_edges)
        adj["syntactic"] = Tensor(graphs.normalize_adjacency(a))
    if config.use_word_semantic:
        sem = semantic_adjacency(x, config.semantic_threshold, config.detach_semantic_graph)
        adj["semantic"] = normalize_adjacency_t(sem)
    return adj


def word_block(sentence: Sentence, emb: EmbeddingTable, params: BlockParams,
               config: ModelConfig) -> Tensor:
    """Encode one sentence into a d-vector: Bi-LSTM, multi-relation graph
    convolution over its words, then columnwise max pooling."""
    ids = [t.vocab_id for t in sentence.tokens]
    x = bilstm(Tensor(emb.matrix[ids]), params.encoder)
    adj = word_adjacencies(sentence, x, config)
    h = multi_gcn(x, adj, params.gcn, config.inner_skip, config.outer_skip)
    return ad.rowwise_max_pool(h)


def sentence_adjacencies(doc: Document, x: Tensor, config: ModelConfig,
                         tfidf: TfidfModel | None) -> dict[str, Tensor]:
    adj: dict[str, Tensor] = {}
    if config.use_sentence_semantic:
        sem = semantic_adjacency(x, config.semantic_threshold, config.detach_semantic_graph)
        adj["semantic"] = normalize_adjacency_t(sem)
    if config.use_natural:
        if tfidf is None:
            raise ValueError("natural-connection relation enabled but no tfidf model given")
        a = graphs.build_natural_connection_graph(doc, tfidf)
        if not config.natural_weights:
            a = (a > 0).astype(np.float64)  # ablation: unweighted natural connections
        adj["natural"] = Tensor(graphs.normalize_adjacency(a))
    return adj


def sentence_block(sentence_embs: Tensor, doc: Document, params: BlockParams,
                   config: ModelConfig, tfidf: TfidfModel | None) -> tuple[Tensor, Tensor]:
    """Encode the (M, d) sentence embeddings into per-sentence states h_s and
    a document vector (columnwise max over h_s)."""
    x = bilstm(sentence_embs, params.encoder)
    adj = sentence_adjacencies(doc, x, config, tfidf)
    h = multi_gcn(x, adj, params.gcn, config.inner_skip, config.outer_skip)
    return h, ad.rowwise_max_pool(h)


def selector_score(h_s: Tensor, doc_emb: Tensor, sentence_embs: Tensor,
                   params: SelectorParams, config: ModelConfig) -> Tensor:
    """Reading stage, optional post-reading stage over [o, doc, sentence]
    context, then a sigmoid score per sentence."""
    m = h_s.shape[0]
    o = ad.tanh(h_s @ params.w_read + params.b_read)
    if config.contextual_info:
        ctx = ad.concat([o, ad.broadcast_rows(doc_emb, m), sentence_embs], axis=1)
        o = ad.tanh(ctx @ params.w_post + params.b_post)
    p = ad.sigmoid(o @ params.w_score + params.b_score)
    return ad.reshape(p, (m,))


def forward(doc: Document, emb: EmbeddingTable, params: ModelParams,
            config: ModelConfig, tfidf: TfidfModel | None = None) -> Tensor:
    """Score every sentence of the document in (0, 1)."""
    embs = [word_block(s, emb, params.word, config) for s in doc.sentences]
    stacked = ad.concat([ad.reshape(e, (1, -1)) for e in embs], axis=0)
    h_s, doc_emb = sentence_block(stacked, doc, params.sentence, config, tfidf)
    return selector_score(h_s, doc_emb, stacked, params.selector, config)


def bce_loss(scores: Tensor, labels) -> Tensor:
    """Mean binary cross-entropy; scores are clamped to [1e-7, 1-1e-7]."""
    y = np.asarray(labels, dtype=np.float64)
    if scores.data.shape != y.shape:
        raise ValueError(f"bce_loss: {scores.data.shape} scores vs {y.shape} labels")
    y_t = Tensor(y)
    p = ad.clip(scores, 1e-7, 1.0 - 1e-7)
    ll = y_t * ad.log(p) + (1.0 - y_t) * ad.log(1.0 - p)
    return ad.neg(ad.mean(ll))


# ---------------------------------------------------------------------------
# summary selection


def sentence_trigrams(sentence: Sentence) -> set[tuple[str, str, str]]:
    toks = sentence.surfaces()
    return {tuple(toks[i:i + 3]) for i in range(len(toks) - 2)}


def select_summary(scores: np.ndarray, doc: Document, k: int,
                   blocking: bool = True) -> list[int]:
    """Walk sentences by descending score (ties to the lower index); with
    blocking on, skip any candidate sharing a token trigram with the already
    selected set. Returns at most k indices in document order."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    chosen: list[int] = []
    seen: set[tuple[str, str, str]] = set()
    for idx in order:
        tris = sentence_trigrams(doc.sentences[idx])
        if blocking and tris & seen:
            continue
        chosen.append(int(idx))
        seen |= tris
        if len(chosen) == k:
            break
    return sorted(chosen)

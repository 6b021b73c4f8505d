"""Command-line entry point.

Subcommands: prepare, oracle, train, evaluate, summarize, grad-check,
sweep-k, ablate. Flags beat config-file values, which beat built-in
defaults; the config file is flat `key = value` text whose keys mirror the
flag names. All randomness flows through --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import reports
from .corpus import (
    Corpus,
    Document,
    Sentence,
    Token,
    Vocabulary,
    build_vocabulary,
    label_corpus,
    load_corpus,
    load_embeddings,
    random_embeddings,
    save_corpus,
    tokenize,
    truncate_corpus,
)
from .graphs import TfidfModel, fit_tfidf, load_stopwords, read_stopword_file
from .model import ModelConfig, forward, select_summary
from .trainer import (
    TrainingConfig,
    evaluate,
    grad_check_model,
    load_checkpoint,
    make_embedding_source,
    run_ablation,
    train,
)

_BOOL_WORDS = {"true": True, "false": False}


def _coerce(value: str):
    lowered = value.lower()
    if lowered in _BOOL_WORDS:
        return _BOOL_WORDS[lowered]
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def parse_config_file(path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config file line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = _coerce(val.strip())
    return values


# ---------------------------------------------------------------------------
# shared flag groups


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--seed", type=int, default=13, help="RNG seed (default 13)")
    p.add_argument("--jobs", type=int, default=1, help="worker cap for per-document work (default 1)")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--d", type=int, default=300, help="hidden width (default 300)")
    g.add_argument("--d-emb", type=int, default=300, help="word embedding width (default 300)")
    g.add_argument("--lstm-layers", type=int, default=2, help="Bi-LSTM layers per block (default 2)")
    g.add_argument("--gcn-layers", type=int, default=2, help="graph-conv layers per relation (default 2)")
    g.add_argument("--k", type=int, default=3, help="sentences to select (default 3)")
    g.add_argument("--min-df", type=int, default=100,
                   help="keyword document-frequency floor (default 100)")
    g.add_argument("--max-sentences", type=int, default=100,
                   help="truncate documents to this many sentences (default 100)")
    g.add_argument("--max-tokens", type=int, default=100,
                   help="truncate sentences to this many tokens (default 100)")
    g.add_argument("--forget-bias", type=float, default=1.0,
                   help="LSTM forget-gate bias init (default 1.0)")
    g.add_argument("--semantic-threshold", type=float, default=0.0,
                   help="zero semantic edges below this weight (default 0)")
    g.add_argument("--no-syntactic", dest="use_syntactic", action="store_false",
                   help="disable the word syntactic relation")
    g.add_argument("--no-word-semantic", dest="use_word_semantic", action="store_false",
                   help="disable the word semantic relation")
    g.add_argument("--no-sentence-semantic", dest="use_sentence_semantic", action="store_false",
                   help="disable the sentence semantic relation")
    g.add_argument("--no-natural", dest="use_natural", action="store_false",
                   help="disable the natural-connection relation")
    g.add_argument("--no-contextual-info", dest="contextual_info", action="store_false",
                   help="skip the post-reading stage of the selector")
    g.add_argument("--no-trigram-blocking", dest="trigram_blocking", action="store_false",
                   help="select plain top-K without trigram blocking")
    g.add_argument("--no-inner-skip", dest="inner_skip", action="store_false",
                   help="drop the per-layer skip connection")
    g.add_argument("--no-outer-skip", dest="outer_skip", action="store_false",
                   help="drop the final input skip connection")
    g.add_argument("--no-natural-weights", dest="natural_weights", action="store_false",
                   help="binarize natural-connection edge weights")
    g.add_argument("--detach-semantic-graph", action="store_true",
                   help="block gradients through semantic graph weights")


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--lr", type=float, default=0.0005, help="Adam learning rate (default 0.0005)")
    g.add_argument("--epochs", type=int, default=50, help="training epochs (default 50)")
    g.add_argument("--batch-size", type=int, default=1,
                   help="documents per optimizer step (default 1)")
    g.add_argument("--patience", type=int, default=3,
                   help="validation evaluations without improvement before stopping (default 3)")
    g.add_argument("--clip-norm", type=float, default=2.0,
                   help="global gradient-norm clip (default 2.0)")
    g.add_argument("--eval-every", type=int, default=1,
                   help="epochs between validation evaluations (default 1)")
    g.add_argument("--stop-loss", type=float, default=None,
                   help="stop once mean train loss drops below this")
    g.add_argument("--quiet", action="store_true", help="suppress per-epoch progress lines")


def _model_config_from_args(args, vocab_size: int) -> ModelConfig:
    return ModelConfig(
        d=args.d, d_emb=args.d_emb, vocab_size=vocab_size,
        lstm_layers=args.lstm_layers, gcn_layers=args.gcn_layers,
        use_syntactic=args.use_syntactic, use_word_semantic=args.use_word_semantic,
        use_sentence_semantic=args.use_sentence_semantic, use_natural=args.use_natural,
        contextual_info=args.contextual_info, trigram_blocking=args.trigram_blocking,
        inner_skip=args.inner_skip, outer_skip=args.outer_skip,
        natural_weights=args.natural_weights,
        detach_semantic_graph=args.detach_semantic_graph,
        semantic_threshold=args.semantic_threshold,
        k=args.k, min_df=args.min_df,
        max_sentences=args.max_sentences, max_tokens=args.max_tokens,
        forget_bias=args.forget_bias,
    ).validate()


def _training_config_from_args(args) -> TrainingConfig:
    return TrainingConfig(
        lr=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
        patience=args.patience, clip_norm=args.clip_norm, eval_every=args.eval_every,
        stop_loss=args.stop_loss, jobs=args.jobs,
    ).validate()


def _load_training_inputs(args):
    vocab = Vocabulary.load(args.vocab)
    tfidf = TfidfModel.load(args.tfidf)
    config = _model_config_from_args(args, vocab_size=len(vocab))
    corpus = truncate_corpus(load_corpus(args.corpus), config.max_sentences,
                             config.max_tokens).index_with(vocab)
    if args.embeddings:
        emb = load_embeddings(args.embeddings, vocab, config.d_emb)
        emb_source = make_embedding_source("file", path=args.embeddings,
                                           d_emb=config.d_emb, vocab_size=len(vocab))
    else:
        emb = random_embeddings(len(vocab), config.d_emb, args.seed)
        emb_source = make_embedding_source("random", seed=args.seed,
                                           d_emb=config.d_emb, vocab_size=len(vocab))
    return vocab, tfidf, config, corpus, emb, emb_source


def _load_eval_bundle(args):
    ckpt = load_checkpoint(args.checkpoint)
    corpus = truncate_corpus(load_corpus(args.corpus), ckpt.config.max_sentences,
                             ckpt.config.max_tokens).index_with(ckpt.vocab)
    return ckpt, corpus


def _blocking_override(args) -> bool | None:
    if args.blocking is None:
        return None
    if isinstance(args.blocking, bool):  # came from a config file
        return args.blocking
    return args.blocking == "on"


# ---------------------------------------------------------------------------
# command handlers


def _cmd_prepare(args) -> int:
    corpus = truncate_corpus(load_corpus(args.input), args.max_sentences, args.max_tokens)
    if len(corpus) == 0:
        raise ValueError("input corpus is empty")
    vocab = build_vocabulary(corpus, args.max_vocab)
    corpus.index_with(vocab)
    stopwords = read_stopword_file(args.stopwords) if args.stopwords else load_stopwords()
    tfidf = fit_tfidf(corpus, vocab, min_df=args.min_df, stopwords=stopwords)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out_dir / "corpus.jsonl")
    vocab.save(out_dir / "vocab.json")
    tfidf.save(out_dir / "tfidf.json")
    print(f"documents: {len(corpus)}")
    print(f"vocabulary: {len(vocab)} words (cap {args.max_vocab})")
    print(f"keywords: {len(tfidf.df)} with df >= {args.min_df}")
    print(f"wrote corpus.jsonl, vocab.json, tfidf.json to {out_dir}")
    return 0


def _cmd_oracle(args) -> int:
    corpus = load_corpus(args.corpus)
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    label_corpus(corpus, max_oracle=args.max_oracle)
    save_corpus(corpus, args.out)
    counts = [sum(d.oracle_labels) for d in corpus]
    print(f"labeled {len(corpus)} documents "
          f"(oracle sizes: min {min(counts)}, max {max(counts)})")
    return 0


def _cmd_train(args) -> int:
    vocab, tfidf, config, corpus, emb, emb_source = _load_training_inputs(args)
    corpus.require_labels()
    val_corpus = None
    if args.val:
        val_corpus = truncate_corpus(load_corpus(args.val), config.max_sentences,
                                     config.max_tokens).index_with(vocab)
    train_config = _training_config_from_args(args)
    ckpt_path = train(corpus, config, train_config, emb, tfidf, emb_source, vocab,
                      args.out_dir, val_corpus=val_corpus, verbose=not args.quiet)
    metrics_path = Path(args.out_dir) / "metrics.csv"
    reports.render_training_curve(metrics_path, Path(args.out_dir) / "training_loss.png")
    print(f"checkpoint: {ckpt_path}")
    print(f"metrics: {metrics_path}")
    return 0


def _cmd_evaluate(args) -> int:
    ckpt, corpus = _load_eval_bundle(args)
    report = evaluate(corpus, ckpt.emb, ckpt.params, ckpt.config, ckpt.tfidf,
                      k=args.k, blocking=_blocking_override(args), jobs=args.jobs)
    print(f"documents: {len(corpus)}  K={report.k}  "
          f"blocking={'on' if report.trigram_blocking else 'off'}")
    print(f"mean R-1 F1: {report.mean_r1:.4f}")
    print(f"mean R-2 F1: {report.mean_r2:.4f}")
    print(f"mean R-L F1: {report.mean_rl:.4f}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = [[d.doc_id, " ".join(map(str, d.selected)), f"{d.r1:.6f}", f"{d.r2:.6f}",
                 f"{d.rl:.6f}"] for d in report.docs]
        reports.write_csv(out_dir / "report.csv", ["id", "selected", "r1", "r2", "rl"], rows)
        reports.render_score_histogram(out_dir / "report_scores.png",
                                       [d.r1 for d in report.docs])
        print(f"wrote report.csv and report_scores.png to {out_dir}")
    return 0


def _cmd_summarize(args) -> int:
    if bool(args.corpus) == bool(args.text):
        raise ValueError("summarize needs exactly one of --corpus or --text")
    ckpt = load_checkpoint(args.checkpoint)
    if args.corpus:
        corpus = load_corpus(args.corpus)
        if args.doc_id:
            corpus = Corpus([d for d in corpus if d.id == args.doc_id])
            if len(corpus) == 0:
                raise ValueError(f"document '{args.doc_id}' not found in {args.corpus}")
    else:
        sentences = []
        for line in Path(args.text).read_text(encoding="utf-8").splitlines():
            toks = tokenize(line)
            if toks:
                sentences.append(Sentence([Token(t) for t in toks],
                                          [(i, i + 1) for i in range(len(toks) - 1)]))
        if not sentences:
            raise ValueError(f"no sentences found in {args.text}")
        corpus = Corpus([Document("text-0", sentences, reference_summary=[])])
    corpus = truncate_corpus(corpus, ckpt.config.max_sentences,
                             ckpt.config.max_tokens).index_with(ckpt.vocab)
    k = args.k if args.k is not None else ckpt.config.k
    blocking = _blocking_override(args)
    if blocking is None:
        blocking = ckpt.config.trigram_blocking
    with open(args.out, "w", encoding="utf-8") as fh:
        for doc in corpus:
            scores = forward(doc, ckpt.emb, ckpt.params, ckpt.config, ckpt.tfidf).data
            selected = select_summary(scores, doc, k, blocking)
            blob = {
                "id": doc.id,
                "selected": selected,
                "summary": [doc.sentences[i].surfaces() for i in selected],
                "scores": [float(s) for s in scores],
            }
            fh.write(json.dumps(blob) + "\n")
    print(f"wrote {len(corpus)} summaries to {args.out}")
    return 0


def _cmd_grad_check(args) -> int:
    report = grad_check_model(seed=args.seed, d=args.d, h=args.h,
                              samples_per_tensor=args.samples)
    groups: dict[str, float] = {}
    for name, err in report.items():
        group = name.split(".", 1)[0]
        groups[group] = max(groups.get(group, 0.0), err)
    for group in sorted(groups):
        print(f"{group}: max relative error {groups[group]:.3e}")
    overall = max(report.values())
    print(f"overall: max relative error {overall:.3e} (tolerance {args.tol:.1e})")
    return 0 if overall < args.tol else 1


def _cmd_sweep_k(args) -> int:
    ckpt, corpus = _load_eval_bundle(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    print(f"{'K':>3}  {'R-1':>8}  {'R-2':>8}  {'R-L':>8}")
    for k in range(1, args.k_max + 1):
        report = evaluate(corpus, ckpt.emb, ckpt.params, ckpt.config, ckpt.tfidf,
                          k=k, blocking=_blocking_override(args), jobs=args.jobs)
        rows.append([k, f"{report.mean_r1:.6f}", f"{report.mean_r2:.6f}",
                     f"{report.mean_rl:.6f}"])
        print(f"{k:>3}  {report.mean_r1:>8.4f}  {report.mean_r2:>8.4f}  {report.mean_rl:>8.4f}")
    reports.write_csv(out_dir / "sweep_k.csv", ["k", "r1", "r2", "rl"], rows)
    reports.render_k_sweep(out_dir / "sweep_k.png",
                           [int(r[0]) for r in rows], [float(r[1]) for r in rows])
    print(f"wrote sweep_k.csv and sweep_k.png to {out_dir}")
    return 0


def _cmd_ablate(args) -> int:
    vocab, tfidf, config, corpus, emb, emb_source = _load_training_inputs(args)
    if args.train:
        corpus.require_labels()
    train_config = _training_config_from_args(args)
    rows = run_ablation(corpus, config, train_config, emb, tfidf, emb_source, vocab,
                        args.out_dir, do_train=args.train, verbose=not args.quiet)
    out_dir = Path(args.out_dir)
    header = ["variant", "params", "analytic_params", "delta_vs_full", "analytic_delta",
              "structural_ok", "r1", "r2", "rl"]
    csv_rows = []
    print(f"{'variant':<32} {'params':>10} {'delta':>9} {'analytic':>9} {'ok':>3}"
          f" {'R-1':>8} {'R-2':>8} {'R-L':>8}")
    for row in rows:
        r1 = "" if row.r1 is None else f"{row.r1:.6f}"
        r2 = "" if row.r2 is None else f"{row.r2:.6f}"
        rl = "" if row.rl is None else f"{row.rl:.6f}"
        csv_rows.append([row.name, row.param_count, row.analytic_count, row.delta_vs_full,
                         row.analytic_delta, row.structural_ok, r1, r2, rl])
        shown_r1 = f"{row.r1:>8.4f}" if row.r1 is not None else f"{'-':>8}"
        shown_r2 = f"{row.r2:>8.4f}" if row.r2 is not None else f"{'-':>8}"
        shown_rl = f"{row.rl:>8.4f}" if row.rl is not None else f"{'-':>8}"
        print(f"{row.name:<32} {row.param_count:>10} {row.delta_vs_full:>9} "
              f"{row.analytic_delta:>9} {'y' if row.structural_ok else 'N':>3}"
              f" {shown_r1} {shown_r2} {shown_rl}")
    reports.write_csv(out_dir / "ablation.csv", header, csv_rows)
    reports.render_ablation(out_dir / "ablation.png", [r.name for r in rows],
                            [r.param_count for r in rows], [r.r1 for r in rows])
    bad = [r.name for r in rows if not r.structural_ok]
    if bad:
        print(f"structural parameter check FAILED for: {', '.join(bad)}")
        return 1
    print("structural parameter check: OK")
    print(f"wrote ablation.csv and ablation.png to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="plexsum",
        description="Multiplex-graph extractive summarizer: data prep, oracle labels, "
                    "training, evaluation, and reporting.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    p = subs.add_parser("prepare", help="validate a raw corpus and build vocab + tfidf artifacts")
    _add_common(p)
    p.add_argument("--input", required=True, help="raw corpus JSONL")
    p.add_argument("--out-dir", required=True, help="directory for corpus.jsonl/vocab.json/tfidf.json")
    p.add_argument("--max-vocab", type=int, default=50_000, help="vocabulary cap (default 50000)")
    p.add_argument("--min-df", type=int, default=100,
                   help="keyword document-frequency floor (default 100)")
    p.add_argument("--max-sentences", type=int, default=100,
                   help="truncate documents to this many sentences (default 100)")
    p.add_argument("--max-tokens", type=int, default=100,
                   help="truncate sentences to this many tokens (default 100)")
    p.add_argument("--stopwords", help="stopword file (one word per line); default: bundled list")
    p.set_defaults(func=_cmd_prepare)
    registry["prepare"] = p

    p = subs.add_parser("oracle", help="attach greedy oracle labels to a corpus")
    _add_common(p)
    p.add_argument("--corpus", required=True, help="corpus JSONL to label")
    p.add_argument("--out", required=True, help="labeled corpus JSONL to write")
    p.add_argument("--max-oracle", type=int, default=3,
                   help="most sentences the oracle may pick (default 3)")
    p.set_defaults(func=_cmd_oracle)
    registry["oracle"] = p

    p = subs.add_parser("train", help="train a model and write a checkpoint")
    _add_common(p)
    p.add_argument("--corpus", required=True, help="labeled training corpus JSONL")
    p.add_argument("--vocab", required=True, help="vocab.json from prepare")
    p.add_argument("--tfidf", required=True, help="tfidf.json from prepare")
    p.add_argument("--out-dir", required=True, help="directory for checkpoint + metrics")
    p.add_argument("--val", help="validation corpus JSONL (enables early stopping)")
    p.add_argument("--embeddings", help="pre-trained embedding text file; default: seeded random")
    _add_model_flags(p)
    _add_training_flags(p)
    p.set_defaults(func=_cmd_train)
    registry["train"] = p

    p = subs.add_parser("evaluate", help="score a checkpoint on a corpus")
    _add_common(p)
    p.add_argument("--corpus", required=True, help="corpus JSONL with reference summaries")
    p.add_argument("--checkpoint", required=True, help="checkpoint.json from train")
    p.add_argument("--k", type=int, default=None, help="override the checkpoint's K")
    p.add_argument("--blocking", choices=["on", "off"], default=None,
                   help="override the checkpoint's trigram blocking")
    p.add_argument("--out-dir", help="also write report.csv + report_scores.png here")
    p.set_defaults(func=_cmd_evaluate)
    registry["evaluate"] = p

    p = subs.add_parser("summarize", help="write summary JSONL for a corpus or raw text")
    _add_common(p)
    p.add_argument("--corpus", help="corpus JSONL to summarize")
    p.add_argument("--text", help="raw text file, one sentence per line")
    p.add_argument("--doc-id", help="only summarize this document id")
    p.add_argument("--checkpoint", required=True, help="checkpoint.json from train")
    p.add_argument("--out", required=True, help="summary JSONL to write")
    p.add_argument("--k", type=int, default=None, help="override the checkpoint's K")
    p.add_argument("--blocking", choices=["on", "off"], default=None,
                   help="override the checkpoint's trigram blocking")
    p.set_defaults(func=_cmd_summarize)
    registry["summarize"] = p

    p = subs.add_parser("grad-check", help="finite-difference check of the full model gradient")
    _add_common(p)
    p.add_argument("--d", type=int, default=16, help="hidden width of the toy model (default 16)")
    p.add_argument("--h", type=float, default=1e-5, help="central-difference step (default 1e-5)")
    p.add_argument("--samples", type=int, default=8,
                   help="coordinates sampled per parameter tensor (default 8)")
    p.add_argument("--tol", type=float, default=1e-3,
                   help="max relative error allowed for exit code 0 (default 1e-3)")
    p.set_defaults(func=_cmd_grad_check, seed=7)
    registry["grad-check"] = p

    p = subs.add_parser("sweep-k", help="tabulate ROUGE vs. number of selected sentences")
    _add_common(p)
    p.add_argument("--corpus", required=True, help="corpus JSONL with reference summaries")
    p.add_argument("--checkpoint", required=True, help="checkpoint.json from train")
    p.add_argument("--k-max", type=int, default=5, help="sweep K from 1 to this (default 5)")
    p.add_argument("--blocking", choices=["on", "off"], default=None,
                   help="override the checkpoint's trigram blocking")
    p.add_argument("--out-dir", required=True, help="directory for sweep_k.csv + sweep_k.png")
    p.set_defaults(func=_cmd_sweep_k)
    registry["sweep-k"] = p

    p = subs.add_parser("ablate", help="structural (and optionally trained) ablation table")
    _add_common(p)
    p.add_argument("--corpus", required=True, help="corpus JSONL (labeled when --train is set)")
    p.add_argument("--vocab", required=True, help="vocab.json from prepare")
    p.add_argument("--tfidf", required=True, help="tfidf.json from prepare")
    p.add_argument("--out-dir", required=True, help="directory for ablation.csv + ablation.png")
    p.add_argument("--embeddings", help="pre-trained embedding text file; default: seeded random")
    p.add_argument("--train", action="store_true", help="also train/evaluate each variant")
    _add_model_flags(p)
    _add_training_flags(p)
    p.set_defaults(func=_cmd_ablate)
    registry["ablate"] = p

    return parser, registry


def _extract_config_path(argv: list[str]) -> str | None:
    for i, item in enumerate(argv):
        if item == "--config":
            if i + 1 >= len(argv):
                return None  # argparse reports the missing value
            return argv[i + 1]
        if item.startswith("--config="):
            return item.split("=", 1)[1]
    return None


def _apply_config_file(argv: list[str], parser: argparse.ArgumentParser,
                       registry: dict[str, argparse.ArgumentParser]) -> None:
    path = _extract_config_path(argv)
    if path is None:
        return
    values = parse_config_file(path)
    known: set[str] = set()
    for sub in registry.values():
        known.update(a.dest for a in sub._actions)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"config file: unknown key(s): {', '.join(unknown)}")
    for sub in registry.values():
        dests = {a.dest for a in sub._actions}
        applicable = {k: v for k, v in values.items() if k in dests}
        if applicable:
            sub.set_defaults(**applicable)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        _apply_config_file(argv, parser, registry)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as e:  # argparse usage errors exit 2; --help exits 0
        return int(e.code or 0)
    except BrokenPipeError:
        return 1
    except Exception as e:  # noqa: BLE001 - one-line cause, nonzero exit
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

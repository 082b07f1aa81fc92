"""stylebot command line: training, chat, serving, and thin wrappers over
the evaluation, shifting, classification, and perplexity operations.

Exit codes: 0 success, 1 runtime error, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .classifier import TfidfRouter, route
from .evalharness import (
    aggregate_annotations,
    emit_annotation_template,
    load_eval_set,
    read_annotation_csv,
    run_eval,
)
from .ngram_lm import BigramLM, corpus_perplexity
from .pipeline import load_engine, respond_to_text
from .textproc import TaggerModel, default_tagger, tokenize
from .training import ConfigError, train_all
from .wordgraph import WordGraph, style_shift

MANIFEST_ENV = "STYLEBOT_MANIFEST"


def _manifest_path(args: argparse.Namespace) -> str:
    manifest = getattr(args, "manifest", None) or os.environ.get(MANIFEST_ENV)
    if not manifest:
        raise ConfigError(f"no manifest given (use --manifest or ${MANIFEST_ENV})")
    return manifest


def _cmd_train_all(args: argparse.Namespace) -> int:
    summary = train_all(args.config, outdir=args.outdir, seed=args.seed, dry_run=args.dry_run)
    if args.dry_run:
        print("config ok (dry run, nothing written)")
        return 0
    assert summary is not None
    print(summary.format())
    return 0


def _cmd_chat(args: argparse.Namespace) -> int:
    engine = load_engine(_manifest_path(args))
    show_trace = False
    print("stylebot ready. :quit exits, :trace toggles trace printing.")
    while True:
        try:
            line = input("> ")
        except EOFError:
            return 0
        line = line.strip()
        if not line:
            continue
        if line == ":quit":
            return 0
        if line == ":trace":
            show_trace = not show_trace
            print(f"trace printing {'on' if show_trace else 'off'}")
            continue
        final, trace = respond_to_text(engine, line, turn_id=f"chat-{id(engine)}-{trace_counter()}")
        print(" ".join(final))
        ppl = trace.response_perplexity
        ppl_str = f"{ppl:.2f}" if ppl is not None else "-"
        print(
            f"[route={trace.route_label} p={trace.route_probability:.3f} "
            f"verdict={trace.verdict} ppl={ppl_str}]"
        )
        if show_trace:
            print(json.dumps(trace.to_json(), indent=1, sort_keys=True))


_counter = {"n": 0}


def trace_counter() -> int:
    _counter["n"] += 1
    return _counter["n"]


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    serve(_manifest_path(args), bind=args.bind)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    engine = load_engine(_manifest_path(args))
    eval_set = load_eval_set(args.eval_set)
    report = run_eval(engine, eval_set, engine.style_lm, set(engine.style_lm.vocab))
    if args.out:
        Path(args.out).write_text(report.to_json_text(), encoding="utf-8")
    if args.template:
        emit_annotation_template(report, args.template)
    if args.json:
        sys.stdout.write(report.to_json_text())
    else:
        print(report.to_table())
    return 0


def _cmd_shift(args: argparse.Namespace) -> int:
    graph = WordGraph.load(args.graph)
    lm = BigramLM.load(args.lm)
    tagger = TaggerModel.load(args.tagger) if args.tagger else default_tagger()
    if args.keywords:
        from .pipeline import load_keywords

        keywords = load_keywords(args.keywords)
    else:
        from .pipeline import load_keywords
        from .textproc import _data_path

        keywords = load_keywords(_data_path("keywords.txt"))
    tokens = tokenize(args.sentence)
    if not tokens:
        raise ValueError("empty input")
    result = style_shift(graph, lm, keywords, tokens, tagger, passes=args.passes)
    if args.json:
        print(
            json.dumps(
                {
                    "best": list(result.best),
                    "ranked": [{"tokens": list(t), "score": s} for t, s in result.ranked],
                },
                sort_keys=True,
            )
        )
    else:
        print(f"{'score':>12}  candidate")
        for tokens_r, score in result.ranked:
            marker = "*" if tokens_r == result.best else " "
            print(f"{score:>12.6f} {marker} {' '.join(tokens_r)}")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    if args.router:
        router = TfidfRouter.load(args.router)
    else:
        router = load_engine(_manifest_path(args)).router
    label, probability = route(router, tokenize(args.utterance))
    if args.json:
        print(json.dumps({"label": label, "probability": probability}, sort_keys=True))
    else:
        print(f"{label} {probability:.6f}")
    return 0


def _cmd_perplexity(args: argparse.Namespace) -> int:
    lm = BigramLM.load(args.model)
    sentences = []
    for line in Path(args.textfile).read_text(encoding="utf-8").splitlines():
        toks = tokenize(line)
        if toks:
            sentences.append(toks)
    if not sentences:
        raise ValueError("empty corpus")
    print(f"{corpus_perplexity(lm, sentences, token_weighted=not args.sentence_mean):.4f}")
    return 0


def _cmd_aggregate(args: argparse.Namespace) -> int:
    sheet = read_annotation_csv(args.sheet)
    result = aggregate_annotations(sheet)
    if args.json:
        print(json.dumps(result, sort_keys=True))
    else:
        for name in ("grammar", "coherence", "style", "average"):
            print(f"{name:<10} {result[name]:.2f}%")
    return 0


def _cmd_pairs(args: argparse.Namespace) -> int:
    from .corpus import load_transcript, write_pairs_tsv

    corpus = load_transcript(args.transcript, args.max_context, args.domain)
    if args.out:
        write_pairs_tsv(corpus, args.out)
        print(f"{corpus.pair_count} pairs -> {args.out}")
    else:
        for p in corpus.pairs:
            print(f"{' '.join(p.post)}\t{' '.join(p.response)}\t{p.domain}\t{p.context_depth}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stylebot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-all", help="train every artifact from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_train_all)

    p = sub.add_parser("chat", help="interactive chat loop")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_chat)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--manifest", default=None)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("eval", help="run the evaluation harness")
    p.add_argument("--manifest", default=None)
    p.add_argument("--eval-set", default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--template", default=None, help="write a blank annotation CSV here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("shift", help="style-shift a sentence and print the ranking")
    p.add_argument("graph")
    p.add_argument("lm")
    p.add_argument("sentence")
    p.add_argument("--keywords", default=None)
    p.add_argument("--tagger", default=None)
    p.add_argument("--passes", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_shift)

    p = sub.add_parser("classify", help="route one utterance")
    p.add_argument("utterance")
    p.add_argument("--router", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("perplexity", help="token-weighted corpus perplexity of a text file")
    p.add_argument("model")
    p.add_argument("textfile")
    p.add_argument("--sentence-mean", action="store_true", help="average per-sentence perplexities instead")
    p.set_defaults(func=_cmd_perplexity)

    p = sub.add_parser("aggregate", help="aggregate a filled annotation sheet")
    p.add_argument("sheet")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("pairs", help="dump context-augmented pairs from a transcript as TSV")
    p.add_argument("transcript")
    p.add_argument("--max-context", type=int, default=2)
    p.add_argument("--domain", default="general")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pairs)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

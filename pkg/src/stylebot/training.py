"""Build every engine artifact from one config file.

The config names the input corpora and hyperparameters; training is fully
seeded, artifact files are written without timestamps, and a rerun with the
same config produces byte-identical output.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import corpus as corpus_mod
from .classifier import RouterConfig, train_router
from .generators import RetrievalGenerator
from .ngram_lm import train_lm
from .pipeline import MANIFEST_FORMAT, compute_reference_perplexity
from .textproc import (
    _data_path,
    load_stopwords,
    load_tagged_corpus,
    pos_tag,
    remove_stopwords,
    train_tagger,
)
from .wordgraph import build_graph


class ConfigError(Exception):
    """Bad or incomplete train-all configuration (CLI exit code 2)."""


@dataclass
class TrainSummary:
    outdir: Path
    artifact_sizes: dict[str, int]
    held_out_accuracy: float
    reference_perplexity: float
    pair_counts: dict[str, int]
    router_losses: list[float] = field(default_factory=list)

    def format(self) -> str:
        lines = [f"engine artifacts written to {self.outdir}"]
        for name, size in sorted(self.artifact_sizes.items()):
            lines.append(f"  {name:<24} {size:>9} bytes")
        lines.append(f"style pairs:            {self.pair_counts['style']}")
        lines.append(f"general pairs:          {self.pair_counts['general']}")
        lines.append(f"router held-out acc:    {self.held_out_accuracy:.3f}")
        lines.append(f"reference perplexity:   {self.reference_perplexity:.4f}")
        return "\n".join(lines)


def _require(config: dict, name: str) -> Any:
    if name not in config or config[name] in (None, ""):
        raise ConfigError(f"config field missing: {name}")
    return config[name]


def _resolve_input(config: dict, base: Path, name: str, default_data: str | None = None) -> Path:
    value = config.get(name)
    if value in (None, ""):
        if default_data is None:
            raise ConfigError(f"config field missing: {name}")
        return _data_path(default_data)
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"config field {name}: unreadable path {path}")
    return path


def load_train_config(path: str | Path) -> tuple[dict, Path]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config, path.parent


def train_all(
    config_path: str | Path,
    outdir: str | Path | None = None,
    seed: int | None = None,
    dry_run: bool = False,
) -> TrainSummary | None:
    """Train router, LM, word graph, tagger, and both generators; write all
    artifacts plus the engine manifest. dry_run validates inputs and writes
    nothing."""
    config, base = load_train_config(config_path)
    seed = seed if seed is not None else int(config.get("seed", 0))
    style_domain = str(config.get("style_domain", "style"))
    general_domain = str(config.get("general_domain", "general"))
    max_context = int(config.get("max_context", 2))

    style_path = _resolve_input(config, base, "style_transcript")
    general_path = _resolve_input(config, base, "general_transcript")
    tagged_path = _resolve_input(config, base, "tagged_corpus", "tagged_corpus.txt")
    stopword_path = _resolve_input(config, base, "stopwords", "stopwords.txt")
    keyword_path = _resolve_input(config, base, "keywords", "keywords.txt")
    fallback_path = _resolve_input(config, base, "fallbacks", "fallbacks.txt")

    out = Path(outdir) if outdir is not None else Path(_require(config, "outdir"))
    if not out.is_absolute():
        out = base / out

    if dry_run:
        return None

    out.mkdir(parents=True, exist_ok=True)

    style_corpus = corpus_mod.load_transcript(style_path, max_context, style_domain)
    general_corpus = corpus_mod.load_transcript(general_path, max_context, general_domain)
    if not style_corpus.pairs:
        raise ConfigError("config field style_transcript: produced no pairs")
    if not general_corpus.pairs:
        raise ConfigError("config field general_transcript: produced no pairs")
    style_utterances = [list(u.tokens) for u in corpus_mod.load_utterances(style_path)]

    tagger = train_tagger(load_tagged_corpus(tagged_path))

    lm_cfg = config.get("lm", {})
    style_lm = train_lm(
        style_utterances,
        smoothing_k=float(lm_cfg.get("smoothing_k", 1.0)),
        min_count=int(lm_cfg.get("min_count", 1)),
    )

    graph = build_graph([pos_tag(tagger, s) for s in style_utterances])

    stopwords = load_stopwords(stopword_path)
    router_cfg_in = config.get("router", {})
    router_cfg = RouterConfig(
        l2=float(router_cfg_in.get("l2", 1e-4)),
        learning_rate=float(router_cfg_in.get("learning_rate", 0.5)),
        epochs=int(router_cfg_in.get("epochs", 200)),
        test_fraction=float(router_cfg_in.get("test_fraction", 0.2)),
        seed=seed,
        max_features=int(router_cfg_in.get("max_features", 10000)),
        use_bigrams=bool(router_cfg_in.get("use_bigrams", True)),
    )
    positive_docs = [remove_stopwords(u.tokens, stopwords) for u in corpus_mod.load_utterances(style_path)]
    negative_docs = [remove_stopwords(u.tokens, stopwords) for u in corpus_mod.load_utterances(general_path)]
    router_result = train_router(
        positive_docs, negative_docs, router_cfg,
        positive_label=style_domain, negative_label=general_domain,
    )

    generators_cfg = config.get("generators", {})
    gen_entries = {}
    for side, pairs in (("style", style_corpus.pairs), ("general", general_corpus.pairs)):
        gen_cfg = generators_cfg.get(side, {"kind": "retrieval"})
        kind = gen_cfg.get("kind", "retrieval")
        filename = f"{side}_generator.{'bin' if kind == 'seq2seq' else 'json'}"
        if kind == "retrieval":
            gen = RetrievalGenerator.build(
                pairs,
                max_features=int(gen_cfg.get("max_features", 10000)),
                use_bigrams=bool(gen_cfg.get("use_bigrams", True)),
            )
            gen.save(out / filename)
        elif kind == "seq2seq":
            from .seq2seq import Seq2SeqConfig, TrainingConfig, train_seq2seq

            model = train_seq2seq(
                Seq2SeqConfig(
                    embedding_dim=int(gen_cfg.get("embedding_dim", 32)),
                    hidden_dim=int(gen_cfg.get("hidden_dim", 64)),
                    num_layers=int(gen_cfg.get("num_layers", 1)),
                    attention=bool(gen_cfg.get("attention", True)),
                ),
                pairs,
                TrainingConfig(
                    epochs=int(gen_cfg.get("epochs", 300)),
                    learning_rate=float(gen_cfg.get("learning_rate", 0.01)),
                    clip_norm=float(gen_cfg.get("clip_norm", 5.0)),
                    seed=seed,
                    min_count=int(gen_cfg.get("min_count", 1)),
                ),
            )
            model.save(out / filename)
        else:
            raise ConfigError(f"config field generators.{side}.kind: unknown kind {kind!r}")
        gen_entries[side] = {"kind": kind, "path": filename}

    reference_perplexity = compute_reference_perplexity(style_utterances, style_lm)

    gate_cfg = config.get("gate", {})
    tagger.save(out / "tagger.json")
    style_lm.save(out / "style_lm.json")
    graph.save(out / "wordgraph.json")
    router_result.router.save(out / "router.json")
    shutil.copyfile(keyword_path, out / "keywords.txt")
    shutil.copyfile(fallback_path, out / "fallbacks.txt")

    manifest = {
        "format": MANIFEST_FORMAT,
        "style_domain": style_domain,
        "general_domain": general_domain,
        "artifacts": {
            "router": "router.json",
            "style_lm": "style_lm.json",
            "graph": "wordgraph.json",
            "tagger": "tagger.json",
        },
        "generators": gen_entries,
        "keyword_file": "keywords.txt",
        "fallback_file": "fallbacks.txt",
        "pipeline": {
            "reference_perplexity": reference_perplexity,
            "gate_low": float(gate_cfg.get("gate_low", 0.3)),
            "gate_high": float(gate_cfg.get("gate_high", 2.0)),
            "confidence_floor": float(gate_cfg.get("confidence_floor", -3.5)),
            "seed": seed,
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )

    sizes = {p.name: p.stat().st_size for p in sorted(out.iterdir()) if p.is_file()}
    return TrainSummary(
        outdir=out,
        artifact_sizes=sizes,
        held_out_accuracy=router_result.held_out_accuracy,
        reference_perplexity=reference_perplexity,
        pair_counts={"style": style_corpus.pair_count, "general": general_corpus.pair_count},
        router_losses=router_result.losses,
    )

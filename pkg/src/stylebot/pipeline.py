"""End-to-end turn orchestration.

route -> generate -> (style shift on the general path) -> gate -> final
response, with a full trace. The gate checks generator confidence first,
then requires the candidate's perplexity under the style LM to fall inside
the multiplicative window [gate_low * ref, gate_high * ref].
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .classifier import TfidfRouter, route
from .generators import (
    Generator,
    GeneratorOutput,
    RetrievalGenerator,
    StandardResponseSet,
    fallback,
    load_fallbacks,
)
from .ngram_lm import BigramLM, corpus_perplexity, perplexity
from .textproc import TaggerModel, tokenize
from .wordgraph import WordGraph, style_shift

VERDICT_ACCEPT = "accept"
VERDICT_LOW_CONFIDENCE = "fallback_low_confidence"
VERDICT_PERPLEXITY = "fallback_perplexity"


@dataclass
class PipelineConfig:
    reference_perplexity: float
    gate_low: float = 0.3
    gate_high: float = 2.0
    confidence_floor: float = -3.5
    keyword_file: str | None = None
    fallback_file: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reference_perplexity <= 0:
            raise ValueError("reference_perplexity must be > 0")
        if not (0 < self.gate_low < 1 < self.gate_high):
            raise ValueError("gate window must satisfy 0 < low < 1 < high")
        if self.confidence_floor > 0:
            raise ValueError("confidence_floor must be <= 0")

    @property
    def window(self) -> tuple[float, float]:
        return (
            self.gate_low * self.reference_perplexity,
            self.gate_high * self.reference_perplexity,
        )


@dataclass
class PipelineTrace:
    turn_id: str
    input_tokens: tuple[str, ...]
    route_label: str
    route_probability: float
    generator_tokens: tuple[str, ...]
    generator_confidence: float
    candidates: list[tuple[tuple[str, ...], float]] | None
    response_perplexity: float | None
    window: tuple[float, float]
    verdict: str
    final_tokens: tuple[str, ...]
    durations_ms: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "input": list(self.input_tokens),
            "route": {"label": self.route_label, "probability": self.route_probability},
            "generator": {
                "tokens": list(self.generator_tokens),
                "confidence": self.generator_confidence,
            },
            "candidates": None
            if self.candidates is None
            else [{"tokens": list(t), "score": s} for t, s in self.candidates],
            "gate": {
                "response_perplexity": self.response_perplexity,
                "window": [self.window[0], self.window[1]],
                "verdict": self.verdict,
            },
            "final": list(self.final_tokens),
            "durations_ms": dict(self.durations_ms),
        }


def load_keywords(path: str | Path) -> frozenset[str]:
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


@dataclass
class Engine:
    router: TfidfRouter
    style_generator: Generator
    general_generator: Generator
    graph: WordGraph
    style_lm: BigramLM
    tagger: TaggerModel
    fallbacks: StandardResponseSet
    keywords: frozenset[str]
    config: PipelineConfig

    def __post_init__(self) -> None:
        for name in (
            "router", "style_generator", "general_generator", "graph",
            "style_lm", "tagger", "fallbacks", "config",
        ):
            if getattr(self, name) is None:
                raise ValueError(f"component not loaded: {name}")

    def respond(self, utterance: Sequence[str], turn_id: str | int) -> tuple[tuple[str, ...], PipelineTrace]:
        return respond(self, utterance, turn_id)


def respond(engine: Engine, utterance: Sequence[str], turn_id: str | int) -> tuple[tuple[str, ...], PipelineTrace]:
    """Run one turn; returns the final tokens and the full trace."""
    tokens = tuple(utterance)
    if not tokens:
        raise ValueError("empty input")
    durations: dict[str, float] = {}

    t0 = time.perf_counter()
    label, probability = route(engine.router, tokens)
    durations["route"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    if label == engine.router.positive_label:
        output: GeneratorOutput = engine.style_generator.generate(tokens)
    else:
        output = engine.general_generator.generate(tokens)
    durations["generate"] = (time.perf_counter() - t0) * 1000

    candidates: list[tuple[tuple[str, ...], float]] | None = None
    candidate = output.tokens
    if label != engine.router.positive_label:
        t0 = time.perf_counter()
        if output.tokens:
            shift = style_shift(
                engine.graph, engine.style_lm, engine.keywords, output.tokens, engine.tagger
            )
            candidate = shift.best
            candidates = shift.ranked
        else:
            candidates = []
        durations["shift"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    low, high = engine.config.window
    resp_ppl = perplexity(engine.style_lm, candidate) if candidate else None
    if output.confidence < engine.config.confidence_floor:
        verdict = VERDICT_LOW_CONFIDENCE
    elif resp_ppl is None or not (low <= resp_ppl <= high):
        verdict = VERDICT_PERPLEXITY
    else:
        verdict = VERDICT_ACCEPT
    if verdict == VERDICT_ACCEPT:
        final = candidate
    else:
        final = fallback(engine.fallbacks, str(turn_id))
    durations["gate"] = (time.perf_counter() - t0) * 1000
    durations["total"] = sum(durations.values())

    trace = PipelineTrace(
        turn_id=str(turn_id),
        input_tokens=tokens,
        route_label=label,
        route_probability=probability,
        generator_tokens=output.tokens,
        generator_confidence=output.confidence,
        candidates=candidates,
        response_perplexity=resp_ppl,
        window=(low, high),
        verdict=verdict,
        final_tokens=final,
        durations_ms=durations,
    )
    return final, trace


def compute_reference_perplexity(style_sentences: Sequence[Sequence[str]], style_lm: BigramLM) -> float:
    """Token-weighted corpus perplexity of the style corpus under its LM;
    this is the gate's reference value."""
    return corpus_perplexity(style_lm, style_sentences, token_weighted=True)


# ---------------------------------------------------------------------------
# Engine manifest: one JSON file naming every artifact plus the gate config.

MANIFEST_FORMAT = "stylebot-manifest/1"


def _load_generator(kind: str, path: Path) -> Generator:
    if kind == "retrieval":
        return RetrievalGenerator.load(path)
    if kind == "seq2seq":
        from .seq2seq import Seq2SeqGenerator, Seq2SeqModel

        return Seq2SeqGenerator(Seq2SeqModel.load(path))
    raise ValueError(f"unknown generator kind: {kind!r}")


def load_engine(manifest_path: str | Path) -> Engine:
    manifest_path = Path(manifest_path)
    obj = json.loads(manifest_path.read_text(encoding="utf-8"))
    if obj.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"unsupported manifest format: {obj.get('format')!r}")
    base = manifest_path.parent

    def resolve(rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else base / p

    arts = obj["artifacts"]
    pipe = obj["pipeline"]
    config = PipelineConfig(
        reference_perplexity=pipe["reference_perplexity"],
        gate_low=pipe["gate_low"],
        gate_high=pipe["gate_high"],
        confidence_floor=pipe["confidence_floor"],
        keyword_file=str(resolve(obj["keyword_file"])),
        fallback_file=str(resolve(obj["fallback_file"])),
        seed=pipe["seed"],
    )
    return Engine(
        router=TfidfRouter.load(resolve(arts["router"])),
        style_generator=_load_generator(
            obj["generators"]["style"]["kind"], resolve(obj["generators"]["style"]["path"])
        ),
        general_generator=_load_generator(
            obj["generators"]["general"]["kind"], resolve(obj["generators"]["general"]["path"])
        ),
        graph=WordGraph.load(resolve(arts["graph"])),
        style_lm=BigramLM.load(resolve(arts["style_lm"])),
        tagger=TaggerModel.load(resolve(arts["tagger"])),
        fallbacks=load_fallbacks(resolve(obj["fallback_file"]), selection_seed=pipe["seed"]),
        keywords=load_keywords(resolve(obj["keyword_file"])),
        config=config,
    )


def respond_to_text(engine: Engine, text: str, turn_id: str | int) -> tuple[tuple[str, ...], PipelineTrace]:
    """Tokenize raw text and respond; raises on input that tokenizes to
    nothing."""
    return respond(engine, tokenize(text), turn_id)

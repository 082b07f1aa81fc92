"""Response generators besides the trainable seq2seq: a deterministic
TF-IDF retrieval generator, the standard-response fallback set, and a
scripted stub for exact pipeline tests. They all expose
`generate(post) -> GeneratorOutput` with a log-probability-style confidence.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .classifier import SparseVector, TfidfVocabulary, fit_tfidf, transform
from .corpus import DialogPair
from .textproc import tokenize

SIMILARITY_FLOOR = 1e-6


@dataclass(frozen=True)
class GeneratorOutput:
    tokens: tuple[str, ...]
    confidence: float  # mean per-token natural-log probability, <= 0


class Generator(Protocol):
    def generate(self, post: Sequence[str]) -> GeneratorOutput: ...


@dataclass
class RetrievalGenerator:
    """Return the response whose indexed post is most cosine-similar to the
    query under TF-IDF; confidence is ln(similarity) floored at ln(1e-6)."""

    pairs: list[DialogPair]
    vocab: TfidfVocabulary
    post_vectors: list[SparseVector]

    @classmethod
    def build(cls, pairs: Sequence[DialogPair], max_features: int = 10000, use_bigrams: bool = True) -> "RetrievalGenerator":
        pairs = list(pairs)
        if not pairs:
            raise ValueError("empty retrieval index")
        vocab = fit_tfidf([list(p.post) for p in pairs], max_features, use_bigrams)
        vectors = [transform(vocab, list(p.post)) for p in pairs]
        return cls(pairs=pairs, vocab=vocab, post_vectors=vectors)

    def generate(self, post: Sequence[str]) -> GeneratorOutput:
        if not self.pairs:
            raise ValueError("empty retrieval index")
        query = transform(self.vocab, list(post))
        dense = np.zeros(len(self.vocab), dtype=np.float64)
        if len(query):
            dense[query.indices] = query.values
        best_idx = 0
        best_sim = -1.0
        for i, vec in enumerate(self.post_vectors):
            sim = vec.dot(dense)
            if sim > best_sim:
                best_sim = sim
                best_idx = i
        similarity = min(max(best_sim, 0.0), 1.0)
        confidence = math.log(max(similarity, SIMILARITY_FLOOR))
        return GeneratorOutput(tokens=self.pairs[best_idx].response, confidence=confidence)

    def to_json(self) -> dict:
        return {
            "format": "stylebot-retrieval/1",
            "max_features": self.vocab.max_features,
            "use_bigrams": self.vocab.use_bigrams,
            "pairs": [[list(p.post), list(p.response), p.domain, p.context_depth] for p in self.pairs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RetrievalGenerator":
        if obj.get("format") != "stylebot-retrieval/1":
            raise ValueError(f"unsupported retrieval format: {obj.get('format')!r}")
        pairs = [
            DialogPair(post=tuple(post), response=tuple(resp), domain=domain, context_depth=depth)
            for post, resp, domain, depth in obj["pairs"]
        ]
        return cls.build(pairs, obj["max_features"], obj["use_bigrams"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "RetrievalGenerator":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ScriptedGenerator:
    """Fixed post -> output mapping for deterministic pipeline tests."""

    script: dict[str, GeneratorOutput]
    default: GeneratorOutput
    hook: Callable[[Sequence[str]], GeneratorOutput] | None = None

    def generate(self, post: Sequence[str]) -> GeneratorOutput:
        if self.hook is not None:
            return self.hook(post)
        return self.script.get(" ".join(post), self.default)


def stable_hash(seed: int, value: str) -> int:
    """Process-independent hash (Python's hash() is salted per run)."""
    digest = hashlib.blake2b(f"{seed}:{value}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass
class StandardResponseSet:
    responses: list[tuple[str, ...]]
    klingon_flags: list[bool]
    selection_seed: int = 0

    def __post_init__(self) -> None:
        if not self.responses:
            raise ValueError("empty standard response set")

    @property
    def klingon(self) -> list[tuple[str, ...]]:
        return [r for r, k in zip(self.responses, self.klingon_flags) if k]

    def select(self, turn_counter: int | str) -> tuple[str, ...]:
        idx = stable_hash(self.selection_seed, str(turn_counter)) % len(self.responses)
        return self.responses[idx]


def fallback(response_set: StandardResponseSet, turn_counter: int | str) -> tuple[str, ...]:
    """Deterministic fallback pick: seeded hash of the turn counter modulo
    the set size, English and Klingon lines pooled."""
    return response_set.select(turn_counter)


def load_fallbacks(path: str | Path, selection_seed: int = 0) -> StandardResponseSet:
    """One response per line; lines prefixed `klingon:` join the Klingon
    sub-list."""
    responses = []
    flags = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        is_klingon = line.startswith("klingon:")
        if is_klingon:
            line = line[len("klingon:"):].strip()
        toks = tuple(tokenize(line))
        if toks:
            responses.append(toks)
            flags.append(is_klingon)
    return StandardResponseSet(responses=responses, klingon_flags=flags, selection_seed=selection_seed)

"""Add-k smoothed bigram language model.

Probabilities are over the predictable vocabulary (everything except the
start token), so every history normalizes to exactly 1. Natural log
throughout; perplexity is exp of the per-token negative log-probability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


@dataclass
class BigramLM:
    vocab: set[str]
    unigram_counts: dict[str, int]
    bigram_counts: dict[tuple[str, str], int]
    smoothing_k: float = 1.0
    min_count: int = 1

    @property
    def predictable_size(self) -> int:
        # BOS is never predicted.
        return len(self.vocab) - 1

    def map_token(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def prob(self, word: str, history: str) -> float:
        """P(word | history) with add-k smoothing; inputs are mapped to
        <unk> when out of vocabulary."""
        w = self.map_token(word)
        h = self.map_token(history) if history != BOS else BOS
        k = self.smoothing_k
        num = self.bigram_counts.get((h, w), 0) + k
        den = self.unigram_counts.get(h, 0) + k * self.predictable_size
        return num / den

    def to_json(self) -> dict:
        return {
            "format": "stylebot-bigram-lm/1",
            "vocab": sorted(self.vocab),
            "unigram_counts": dict(sorted(self.unigram_counts.items())),
            "bigram_counts": {f"{h} {w}": c for (h, w), c in sorted(self.bigram_counts.items())},
            "smoothing_k": self.smoothing_k,
            "min_count": self.min_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BigramLM":
        if obj.get("format") != "stylebot-bigram-lm/1":
            raise ValueError(f"unsupported LM format: {obj.get('format')!r}")
        bigrams = {}
        for key, c in obj["bigram_counts"].items():
            h, w = key.split(" ")
            bigrams[(h, w)] = c
        return cls(
            vocab=set(obj["vocab"]),
            unigram_counts=dict(obj["unigram_counts"]),
            bigram_counts=bigrams,
            smoothing_k=obj["smoothing_k"],
            min_count=obj["min_count"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "BigramLM":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def train_lm(
    sentences: Iterable[Sequence[str]],
    smoothing_k: float = 1.0,
    min_count: int = 1,
) -> BigramLM:
    """Count bigrams over `<s> w1 .. wn </s>` wrapped sentences; tokens rarer
    than min_count collapse to <unk>."""
    sentences = [list(s) for s in sentences]
    if not sentences:
        raise ValueError("empty corpus")
    if smoothing_k <= 0:
        raise ValueError("smoothing_k must be > 0")

    freq: dict[str, int] = {}
    for s in sentences:
        for t in s:
            freq[t] = freq.get(t, 0) + 1

    def remap(t: str) -> str:
        return t if freq[t] >= min_count else UNK

    vocab = {BOS, EOS, UNK}
    unigrams: dict[str, int] = {}
    bigrams: dict[tuple[str, str], int] = {}
    for s in sentences:
        seq = [BOS] + [remap(t) for t in s] + [EOS]
        vocab.update(seq)
        for t in seq:
            unigrams[t] = unigrams.get(t, 0) + 1
        for h, w in zip(seq, seq[1:]):
            bigrams[(h, w)] = bigrams.get((h, w), 0) + 1
    return BigramLM(
        vocab=vocab,
        unigram_counts=unigrams,
        bigram_counts=bigrams,
        smoothing_k=smoothing_k,
        min_count=min_count,
    )


def log_prob(lm: BigramLM, sentence: Sequence[str]) -> float:
    """Natural-log probability of the wrapped sentence; an empty sentence
    scores the boundary bigram <s> </s> alone."""
    seq = [BOS] + [lm.map_token(t) for t in sentence] + [EOS]
    total = 0.0
    for h, w in zip(seq, seq[1:]):
        total += math.log(lm.prob(w, h))
    return total


def perplexity(lm: BigramLM, sentence: Sequence[str]) -> float:
    """exp(-log_prob / N) with N = len(sentence) + 1 predicted tokens."""
    if not sentence:
        raise ValueError("empty sentence")
    n = len(sentence) + 1
    return math.exp(-log_prob(lm, sentence) / n)


def corpus_perplexity(
    lm: BigramLM,
    sentences: Iterable[Sequence[str]],
    token_weighted: bool = True,
) -> float:
    """Token-weighted perplexity by default: exp of total negative log-prob
    over total predicted tokens. token_weighted=False averages the
    per-sentence perplexities instead."""
    sentences = [list(s) for s in sentences]
    if not sentences:
        raise ValueError("empty corpus")
    if token_weighted:
        total_lp = 0.0
        total_n = 0
        for s in sentences:
            total_lp += log_prob(lm, s)
            total_n += len(s) + 1
        return math.exp(-total_lp / total_n)
    return sum(perplexity(lm, s) for s in sentences) / len(sentences)

"""Transcript ingestion: cleaning, scene splitting, context-augmented pairs.

Transcript format: UTF-8 text, one `NAME: utterance` line per utterance,
blank lines (or lines starting with `#`) separate scenes. Stage directions in
parentheses or square brackets are stripped; a line that cleans to nothing is
dropped without ending its scene.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .textproc import tokenize

# Separator token inserted between concatenated context utterances.
SEP = "<sep>"

_SPEAKER_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_.' -]{0,40}?)\s*:\s*(.*)$")
_PAREN_RE = re.compile(r"\([^()]*\)")
_BRACKET_RE = re.compile(r"\[[^\[\]]*\]")


@dataclass(frozen=True)
class Utterance:
    speaker: str | None
    tokens: tuple[str, ...]
    raw: str


@dataclass(frozen=True)
class DialogPair:
    post: tuple[str, ...]
    response: tuple[str, ...]
    domain: str
    context_depth: int = 1


@dataclass
class Corpus:
    pairs: list[DialogPair]
    vocabulary: set[str] = field(default_factory=set)
    pair_count: int = 0
    mean_utterance_length: float = 0.0

    @classmethod
    def from_pairs(cls, pairs: Iterable[DialogPair]) -> "Corpus":
        pairs = list(pairs)
        vocab: set[str] = set()
        total_tokens = 0
        for p in pairs:
            vocab.update(p.post)
            vocab.update(p.response)
            total_tokens += len(p.post) + len(p.response)
        mean = total_tokens / (2 * len(pairs)) if pairs else 0.0
        return cls(pairs=pairs, vocabulary=vocab, pair_count=len(pairs), mean_utterance_length=mean)


def _strip_stage_directions(text: str) -> str:
    # Innermost-out so nested directions vanish too; stray bracket characters
    # are removed afterwards (the cleaning contract is "no ( or [ survive").
    prev = None
    while prev != text:
        prev = text
        text = _PAREN_RE.sub(" ", text)
        text = _BRACKET_RE.sub(" ", text)
    return text.replace("(", " ").replace(")", " ").replace("[", " ").replace("]", " ")


def clean_line(raw: str) -> Utterance | None:
    """Clean one transcript line; None when nothing is left after cleaning."""
    text = _strip_stage_directions(raw)
    m = _SPEAKER_RE.match(text)
    if m:
        speaker: str | None = m.group(1).strip().upper()
        text = m.group(2)
    else:
        speaker = None
    tokens = tokenize(text)
    if not tokens:
        return None
    return Utterance(speaker=speaker, tokens=tuple(tokens), raw=raw)


def clean_transcript(raw_lines: Iterable[str]) -> list[Utterance]:
    """Clean lines into utterances, dropping the ones that clean to nothing."""
    out = []
    for raw in raw_lines:
        utt = clean_line(raw)
        if utt is not None:
            out.append(utt)
    return out


def _is_scene_break(raw: str) -> bool:
    stripped = raw.strip()
    return not stripped or stripped.startswith("#")


def parse_scenes(raw_lines: Iterable[str]) -> list[list[Utterance]]:
    """Split a transcript into scenes and clean each one. Pairs never cross
    scene boundaries."""
    scenes: list[list[Utterance]] = []
    current: list[Utterance] = []
    for raw in raw_lines:
        if _is_scene_break(raw):
            if current:
                scenes.append(current)
                current = []
            continue
        utt = clean_line(raw)
        if utt is not None:
            current.append(utt)
    if current:
        scenes.append(current)
    return scenes


def build_pairs(scene: Sequence[Utterance], max_context: int, domain: str = "general") -> list[DialogPair]:
    """Emit adjacency pairs, then context-augmented pairs per depth.

    Depth 1 gives every adjacent (predecessor, successor); each depth c in
    2..max_context concatenates c consecutive utterances (SEP-joined) as the
    post for the following utterance. Scenes shorter than 2 yield nothing.
    """
    if max_context < 1:
        raise ValueError("max_context must be >= 1")
    if len(scene) < 2:
        return []
    pairs: list[DialogPair] = []
    for depth in range(1, max_context + 1):
        for start in range(len(scene) - depth):
            context = scene[start : start + depth]
            response = scene[start + depth]
            post: list[str] = []
            for i, utt in enumerate(context):
                if i:
                    post.append(SEP)
                post.extend(utt.tokens)
            pairs.append(
                DialogPair(
                    post=tuple(post),
                    response=response.tokens,
                    domain=domain,
                    context_depth=depth,
                )
            )
    return pairs


def build_corpus(scenes: Iterable[Sequence[Utterance]], max_context: int, domain: str) -> Corpus:
    pairs: list[DialogPair] = []
    for scene in scenes:
        pairs.extend(build_pairs(scene, max_context, domain))
    return Corpus.from_pairs(pairs)


def load_transcript(path: str | Path, max_context: int, domain: str) -> Corpus:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return build_corpus(parse_scenes(lines), max_context, domain)


def load_utterances(path: str | Path) -> list[Utterance]:
    """All cleaned utterances of a transcript, scene structure flattened."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [u for scene in parse_scenes(lines) for u in scene]


def corpus_stats(corpus: Corpus) -> tuple[int, float]:
    """(pair count, mean token count over all posts and responses)."""
    return corpus.pair_count, corpus.mean_utterance_length


def write_pairs_tsv(corpus: Corpus, path: str | Path) -> None:
    """`post \\t response \\t domain \\t context_depth`, tokens space-joined."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in corpus.pairs:
            fh.write(f"{' '.join(p.post)}\t{' '.join(p.response)}\t{p.domain}\t{p.context_depth}\n")


def read_pairs_tsv(path: str | Path) -> Corpus:
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        post, response, domain, depth = line.split("\t")
        pairs.append(
            DialogPair(
                post=tuple(post.split()),
                response=tuple(response.split()),
                domain=domain,
                context_depth=int(depth),
            )
        )
    return Corpus.from_pairs(pairs)

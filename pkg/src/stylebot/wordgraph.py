"""Directed word graph over (word, POS) nodes and single-insertion shifting.

Nodes are (word, tag) pairs, so a word observed under two tags becomes two
nodes. Edges record adjacency counts in the style corpus, including edges
from the start boundary and into the end boundary. A candidate word can be
inserted into a gap when the graph witnesses both (left -> word) and
(word -> right) edges.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .ngram_lm import BigramLM, log_prob
from .textproc import TaggedToken, TaggerModel, pos_tag

BOS_NODE = ("<s>", "<s>")
EOS_NODE = ("</s>", "</s>")

Node = tuple[str, str]


@dataclass
class WordGraph:
    nodes: set[Node]
    edges: dict[tuple[Node, Node], int]

    def __post_init__(self) -> None:
        self._successors: dict[Node, set[Node]] = defaultdict(set)
        self._predecessors: dict[Node, set[Node]] = defaultdict(set)
        self._word_nodes: dict[str, set[Node]] = defaultdict(set)
        for (a, b) in self.edges:
            self._successors[a].add(b)
            self._predecessors[b].add(a)
        for node in self.nodes:
            self._word_nodes[node[0]].add(node)

    def has_edge(self, a: Node, b: Node) -> bool:
        return (a, b) in self.edges

    def successors(self, node: Node) -> set[Node]:
        return self._successors.get(node, set())

    def predecessors(self, node: Node) -> set[Node]:
        return self._predecessors.get(node, set())

    def match_token(self, token: TaggedToken) -> set[Node]:
        """Nodes standing in for an input token: exact (word, pos) node when
        present, any node with the same word otherwise."""
        node = (token.word, token.pos)
        if node in self.nodes:
            return {node}
        return set(self._word_nodes.get(token.word, set()))

    def to_json(self) -> dict:
        return {
            "format": "stylebot-wordgraph/1",
            "nodes": sorted(self.nodes),
            "edges": [[a[0], a[1], b[0], b[1], c] for (a, b), c in sorted(self.edges.items())],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WordGraph":
        if obj.get("format") != "stylebot-wordgraph/1":
            raise ValueError(f"unsupported word graph format: {obj.get('format')!r}")
        nodes = {(w, p) for w, p in obj["nodes"]}
        edges = {((aw, ap), (bw, bp)): c for aw, ap, bw, bp, c in obj["edges"]}
        return cls(nodes=nodes, edges=edges)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "WordGraph":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_graph(tagged_sentences: Iterable[Sequence[TaggedToken]]) -> WordGraph:
    """Add every tagged token as a node and every adjacent ordered pair
    (boundaries included) as a counted edge."""
    nodes: set[Node] = set()
    edges: dict[tuple[Node, Node], int] = {}
    seen_any = False
    for sentence in tagged_sentences:
        if not sentence:
            continue
        seen_any = True
        path: list[Node] = [BOS_NODE]
        path.extend((t.word, t.pos) for t in sentence)
        path.append(EOS_NODE)
        nodes.update(path[1:-1])
        for a, b in zip(path, path[1:]):
            edges[(a, b)] = edges.get((a, b), 0) + 1
    if not seen_any:
        raise ValueError("empty corpus")
    return WordGraph(nodes=nodes, edges=edges)


@dataclass(frozen=True)
class InsertionCandidate:
    tokens: tuple[str, ...]
    inserted_word: str
    position: int
    source_pos: str


def insertion_candidates(graph: WordGraph, tagged_input: Sequence[TaggedToken]) -> list[InsertionCandidate]:
    """Every word insertable into any gap (start and end included) such that
    the graph has edges from the left neighbor to the word and from the word
    to the right neighbor. Duplicate (word, position) pairs collapse."""
    if not tagged_input:
        raise ValueError("empty input")
    words = [t.word for t in tagged_input]
    n = len(tagged_input)
    out: list[InsertionCandidate] = []
    for pos in range(n + 1):
        left = {BOS_NODE} if pos == 0 else graph.match_token(tagged_input[pos - 1])
        right = {EOS_NODE} if pos == n else graph.match_token(tagged_input[pos])
        if not left or not right:
            continue
        after_left: set[Node] = set()
        for node in left:
            after_left |= graph.successors(node)
        before_right: set[Node] = set()
        for node in right:
            before_right |= graph.predecessors(node)
        fillers = after_left & before_right - {BOS_NODE, EOS_NODE}
        best_tag: dict[str, str] = {}
        for word, tag in fillers:
            if word not in best_tag or tag < best_tag[word]:
                best_tag[word] = tag
        for word in sorted(best_tag):
            out.append(
                InsertionCandidate(
                    tokens=tuple(words[:pos] + [word] + words[pos:]),
                    inserted_word=word,
                    position=pos,
                    source_pos=best_tag[word],
                )
            )
    return out


@dataclass
class ShiftResult:
    best: tuple[str, ...]
    ranked: list[tuple[tuple[str, ...], float]]


def length_normalized_score(lm: BigramLM, tokens: Sequence[str]) -> float:
    """Per-predicted-token log-probability (the negative log of perplexity)."""
    return log_prob(lm, tokens) / (len(tokens) + 1)


def style_shift(
    graph: WordGraph,
    lm: BigramLM,
    keywords: frozenset[str] | set[str],
    input_tokens: Sequence[str],
    tagger: TaggerModel,
    passes: int = 1,
) -> ShiftResult:
    """Rank the input against all single-insertion variants by
    length-normalized LM score; score ties go to keyword-bearing candidates,
    then to the lexicographically smaller sentence. passes > 1 reapplies the
    shift to the previous winner."""
    if not input_tokens:
        raise ValueError("empty input")
    current = tuple(input_tokens)
    result: ShiftResult | None = None
    for _ in range(max(1, passes)):
        tagged = pos_tag(tagger, current)
        candidates = {current}
        candidates.update(c.tokens for c in insertion_candidates(graph, tagged))

        def sort_key(tokens: tuple[str, ...]) -> tuple:
            has_kw = any(t in keywords for t in tokens)
            return (-length_normalized_score(lm, tokens), not has_kw, " ".join(tokens))

        ordered = sorted(candidates, key=sort_key)
        ranked = [(tokens, length_normalized_score(lm, tokens)) for tokens in ordered]
        result = ShiftResult(best=ordered[0], ranked=ranked)
        if result.best == current:
            break
        current = result.best
    assert result is not None
    return result

"""Tokenization, stop words, and a lexicon+suffix POS tagger.

The tagger is deliberately simple: a per-word majority-tag lexicon with an
ordered suffix-rule fallback and a corpus-level default tag. The word graph
only needs tags that are *consistent* between the graph corpus and tagged
inputs, which a unigram lexicon guarantees as long as the same model is used
on both sides.
"""

from __future__ import annotations

import json
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

# Penn Treebank tag set (36 word tags) plus the punctuation tags the
# tokenizer can produce.
PTB_TAGS = frozenset(
    """
    CC CD DT EX FW IN JJ JJR JJS LS MD NN NNS NNP NNPS PDT POS PRP PRP$
    RB RBR RBS RP SYM TO UH VB VBD VBG VBN VBP VBZ WDT WP WP$ WRB
    """.split()
)
PUNCT_TAGS = frozenset({".", ",", ":", "''", "``", "(", ")", "#", "$"})
TAGSET = PTB_TAGS | PUNCT_TAGS

# Ordered: first matching suffix wins. Tags must stay inside TAGSET.
DEFAULT_SUFFIX_RULES: tuple[tuple[str, str], ...] = (
    ("ing", "VBG"),
    ("edly", "RB"),
    ("ly", "RB"),
    ("ied", "VBD"),
    ("ed", "VBD"),
    ("tion", "NN"),
    ("ness", "NN"),
    ("ment", "NN"),
    ("able", "JJ"),
    ("ible", "JJ"),
    ("ous", "JJ"),
    ("ive", "JJ"),
    ("ful", "JJ"),
    ("est", "JJS"),
    ("ies", "NNS"),
    ("s", "NNS"),
)

# Punctuation characters split into their own tokens.
_SPLIT_PUNCT = ".,!?;:'\""
_PUNCT_RE = re.compile("([" + re.escape(_SPLIT_PUNCT) + "])")

_PUNCT_TAG_MAP = {
    ".": ".", "!": ".", "?": ".",
    ",": ",", ";": ":", ":": ":",
    "'": "''", '"': "''",
}


def tokenize(text: str) -> list[str]:
    """Lower-case, split the punctuation set into separate tokens, split on
    whitespace."""
    return _PUNCT_RE.sub(r" \1 ", text.lower()).split()


def detokenize(tokens: Sequence[str]) -> str:
    """Space-join tokens for display. The engine is token-level throughout;
    this is presentation only."""
    return " ".join(tokens)


def _data_path(name: str) -> Path:
    return Path(str(resources.files("stylebot").joinpath("data", name)))


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a one-word-per-line stop-word list (the shipped list by default)."""
    p = Path(path) if path is not None else _data_path("stopwords.txt")
    words = {line.strip() for line in p.read_text(encoding="utf-8").splitlines()}
    return frozenset(w for w in words if w)


_DEFAULT_STOPWORDS: frozenset[str] | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = load_stopwords()
    return _DEFAULT_STOPWORDS


def remove_stopwords(tokens: Sequence[str], stopwords: frozenset[str] | None = None) -> list[str]:
    """Drop tokens present in the stop-word list, preserving order."""
    sw = stopwords if stopwords is not None else default_stopwords()
    return [t for t in tokens if t not in sw]


@dataclass(frozen=True)
class TaggedToken:
    word: str
    pos: str


@dataclass
class TaggerModel:
    """Majority-tag lexicon with suffix-rule and default-tag fallback."""

    lexicon: dict[str, str]
    counts: dict[str, dict[str, int]]
    suffix_rules: tuple[tuple[str, str], ...]
    default_tag: str
    tagset: frozenset[str] = field(default=TAGSET)

    def tag_word(self, word: str) -> str:
        tag = self.lexicon.get(word)
        if tag is not None:
            return tag
        for suffix, stag in self.suffix_rules:
            if len(word) > len(suffix) and word.endswith(suffix):
                return stag
        return self.default_tag

    def to_json(self) -> dict:
        return {
            "format": "stylebot-tagger/1",
            "lexicon": dict(sorted(self.lexicon.items())),
            "counts": {w: dict(sorted(c.items())) for w, c in sorted(self.counts.items())},
            "suffix_rules": [list(r) for r in self.suffix_rules],
            "default_tag": self.default_tag,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TaggerModel":
        if obj.get("format") != "stylebot-tagger/1":
            raise ValueError(f"unsupported tagger format: {obj.get('format')!r}")
        return cls(
            lexicon=dict(obj["lexicon"]),
            counts={w: dict(c) for w, c in obj["counts"].items()},
            suffix_rules=tuple((s, t) for s, t in obj["suffix_rules"]),
            default_tag=obj["default_tag"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "TaggerModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def train_tagger(
    tagged_corpus: Iterable[Sequence[TaggedToken]],
    suffix_rules: tuple[tuple[str, str], ...] = DEFAULT_SUFFIX_RULES,
) -> TaggerModel:
    """Build the majority-tag lexicon. Ties go to the lexicographically
    smallest tag; the default tag is the corpus-wide majority."""
    word_tags: dict[str, Counter] = defaultdict(Counter)
    all_tags: Counter = Counter()
    for sentence in tagged_corpus:
        for tok in sentence:
            word_tags[tok.word][tok.pos] += 1
            all_tags[tok.pos] += 1
    if not all_tags:
        raise ValueError("empty tagger corpus")

    def majority(counter: Counter) -> str:
        return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    lexicon = {w: majority(c) for w, c in word_tags.items()}
    return TaggerModel(
        lexicon=lexicon,
        counts={w: dict(c) for w, c in word_tags.items()},
        suffix_rules=suffix_rules,
        default_tag=majority(all_tags),
    )


def pos_tag(model: TaggerModel, tokens: Sequence[str]) -> list[TaggedToken]:
    """Tag each token: lexicon, then first matching suffix rule, then the
    default tag. Punctuation tokens get their fixed punctuation tags."""
    out = []
    for tok in tokens:
        if tok in _PUNCT_TAG_MAP and tok not in model.lexicon:
            out.append(TaggedToken(tok, _PUNCT_TAG_MAP[tok]))
        else:
            out.append(TaggedToken(tok, model.tag_word(tok)))
    return out


def parse_tagged_line(line: str) -> list[TaggedToken]:
    """Parse one `word_TAG word_TAG ...` sentence."""
    toks = []
    for chunk in line.split():
        word, _, tag = chunk.rpartition("_")
        if not word:
            raise ValueError(f"malformed tagged token: {chunk!r}")
        toks.append(TaggedToken(word, tag))
    return toks


def load_tagged_corpus(path: str | Path | None = None) -> list[list[TaggedToken]]:
    """Load a tagged corpus, one `word_TAG` sentence per line (shipped fixture
    corpus by default)."""
    p = Path(path) if path is not None else _data_path("tagged_corpus.txt")
    sentences = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            sentences.append(parse_tagged_line(line))
    return sentences


def default_tagger() -> TaggerModel:
    """Tagger trained on the shipped tagged corpus."""
    return train_tagger(load_tagged_corpus())

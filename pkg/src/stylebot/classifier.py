"""TF-IDF features and a logistic-regression router.

Features are unigrams plus adjacent bigrams (space-joined), idf = ln(N/df)
with no smoothing, and the vocabulary keeps the max_features candidates with
the largest summed tf-idf mass. The router is trained from scratch with
full-batch gradient descent.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


def _doc_features(tokens: Sequence[str], use_bigrams: bool) -> Counter:
    feats = Counter(tokens)
    if use_bigrams:
        feats.update(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return feats


@dataclass
class TfidfVocabulary:
    features: dict[str, int]
    idf: np.ndarray
    max_features: int = 10000
    use_bigrams: bool = True

    def __len__(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2)))

    def dot(self, dense: np.ndarray) -> float:
        if len(self.indices) == 0:
            return 0.0
        return float(dense[self.indices] @ self.values)


def fit_tfidf(
    documents: Sequence[Sequence[str]],
    max_features: int = 10000,
    use_bigrams: bool = True,
) -> TfidfVocabulary:
    """Select the max_features candidates with the largest summed tf*idf mass
    (ties to the lexicographically smaller feature); idf = ln(N/df)."""
    if not documents:
        raise ValueError("empty corpus")
    n_docs = len(documents)
    df: Counter = Counter()
    total_tf: Counter = Counter()
    for doc in documents:
        feats = _doc_features(doc, use_bigrams)
        df.update(feats.keys())
        total_tf.update(feats)

    idf_all = {f: math.log(n_docs / df[f]) for f in df}
    mass = {f: total_tf[f] * idf_all[f] for f in df}
    selected = sorted(mass, key=lambda f: (-mass[f], f))[:max_features]
    selected.sort()

    features = {f: i for i, f in enumerate(selected)}
    idf = np.array([idf_all[f] for f in selected], dtype=np.float64)
    return TfidfVocabulary(features=features, idf=idf, max_features=max_features, use_bigrams=use_bigrams)


def transform(vocab: TfidfVocabulary, document: Sequence[str]) -> SparseVector:
    """tf*idf vector of the document, L2-normalized when nonzero; features
    outside the vocabulary (or with idf 0) drop out."""
    feats = _doc_features(document, vocab.use_bigrams)
    entries = []
    for f, tf in feats.items():
        col = vocab.features.get(f)
        if col is None:
            continue
        value = tf * vocab.idf[col]
        if value != 0.0:
            entries.append((col, value))
    entries.sort()
    if not entries:
        return SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    indices = np.array([i for i, _ in entries], dtype=np.int64)
    values = np.array([v for _, v in entries], dtype=np.float64)
    norm = np.sqrt(np.sum(values**2))
    if norm > 0:
        values = values / norm
    return SparseVector(indices, values)


@dataclass
class RouterConfig:
    l2: float = 1e-4
    learning_rate: float = 0.5
    epochs: int = 200
    test_fraction: float = 0.2
    seed: int = 13
    max_features: int = 10000
    use_bigrams: bool = True


@dataclass
class TfidfRouter:
    vocabulary: TfidfVocabulary
    weights: np.ndarray
    bias: float
    positive_label: str
    negative_label: str

    def to_json(self) -> dict:
        return {
            "format": "stylebot-router/1",
            "features": dict(sorted(self.vocabulary.features.items(), key=lambda kv: kv[1])),
            "idf": self.vocabulary.idf.tolist(),
            "max_features": self.vocabulary.max_features,
            "use_bigrams": self.vocabulary.use_bigrams,
            "weights": self.weights.tolist(),
            "bias": float(self.bias),
            "positive_label": self.positive_label,
            "negative_label": self.negative_label,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TfidfRouter":
        if obj.get("format") != "stylebot-router/1":
            raise ValueError(f"unsupported router format: {obj.get('format')!r}")
        vocab = TfidfVocabulary(
            features=dict(obj["features"]),
            idf=np.array(obj["idf"], dtype=np.float64),
            max_features=obj["max_features"],
            use_bigrams=obj["use_bigrams"],
        )
        return cls(
            vocabulary=vocab,
            weights=np.array(obj["weights"], dtype=np.float64),
            bias=obj["bias"],
            positive_label=obj["positive_label"],
            negative_label=obj["negative_label"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "TfidfRouter":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TrainResult:
    router: TfidfRouter
    held_out_accuracy: float
    losses: list[float] = field(default_factory=list)


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-z))


def loss_and_grad(
    weights: np.ndarray,
    bias: float,
    x: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy + (l2/2)||w||^2 and its analytic gradient."""
    n = x.shape[0]
    p = _sigmoid(x @ weights + bias)
    p_safe = np.clip(p, 1e-12, 1 - 1e-12)
    loss = float(-np.mean(y * np.log(p_safe) + (1 - y) * np.log(1 - p_safe)))
    loss += 0.5 * l2 * float(weights @ weights)
    err = p - y
    grad_w = x.T @ err / n + l2 * weights
    grad_b = float(np.mean(err))
    return loss, grad_w, grad_b


def _to_dense(vectors: Sequence[SparseVector], n_features: int) -> np.ndarray:
    x = np.zeros((len(vectors), n_features), dtype=np.float64)
    for row, vec in enumerate(vectors):
        if len(vec):
            x[row, vec.indices] = vec.values
    return x


def train_router(
    positive: Sequence[Sequence[str]],
    negative: Sequence[Sequence[str]],
    config: RouterConfig | None = None,
    positive_label: str = "style",
    negative_label: str = "general",
) -> TrainResult:
    """Seeded 80/20 split, TF-IDF fit on the training split, full-batch
    gradient descent, held-out accuracy on the rest."""
    config = config or RouterConfig()
    if not positive or not negative:
        raise ValueError("both classes need at least one document")

    docs = [(list(d), 1) for d in positive] + [(list(d), 0) for d in negative]
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(docs))
    docs = [docs[i] for i in order]
    n_test = max(1, int(round(len(docs) * config.test_fraction)))
    test, train = docs[:n_test], docs[n_test:]
    if not train:
        raise ValueError("not enough documents to train after the split")

    vocab = fit_tfidf([d for d, _ in train], config.max_features, config.use_bigrams)
    x = _to_dense([transform(vocab, d) for d, _ in train], len(vocab))
    y = np.array([label for _, label in train], dtype=np.float64)

    weights = np.zeros(len(vocab), dtype=np.float64)
    bias = 0.0
    losses = []
    for _ in range(config.epochs):
        _, grad_w, grad_b = loss_and_grad(weights, bias, x, y, config.l2)
        weights = weights - config.learning_rate * grad_w
        bias = bias - config.learning_rate * grad_b
        losses.append(loss_and_grad(weights, bias, x, y, config.l2)[0])

    router = TfidfRouter(
        vocabulary=vocab,
        weights=weights,
        bias=bias,
        positive_label=positive_label,
        negative_label=negative_label,
    )
    correct = 0
    for doc, label in test:
        pred_label, _ = route(router, doc)
        if (pred_label == positive_label) == bool(label):
            correct += 1
    accuracy = correct / len(test)
    return TrainResult(router=router, held_out_accuracy=accuracy, losses=losses)


def route(router: TfidfRouter, utterance: Sequence[str]) -> tuple[str, float]:
    """(label, positive-class probability); probability >= 0.5 routes to the
    positive label."""
    vec = transform(router.vocabulary, utterance)
    p = float(_sigmoid(vec.dot(router.weights) + router.bias))
    label = router.positive_label if p >= 0.5 else router.negative_label
    return label, p

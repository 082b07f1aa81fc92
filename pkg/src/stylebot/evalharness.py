"""Evaluation: fixed eval set, response perplexity, vocabulary overlap, and
human-annotation aggregation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .ngram_lm import BigramLM, log_prob, perplexity
from .pipeline import Engine, respond
from .textproc import tokenize

METRICS = ("grammar", "coherence", "style")


@dataclass(frozen=True)
class EvalItem:
    utterance: str
    expected_domain: str


@dataclass
class EvalSet:
    items: list[EvalItem]
    composition: dict[str, int] = field(default_factory=dict)


def load_eval_set(path: str | Path | None = None) -> EvalSet:
    """Load an eval set; the shipped default has 20 items, 10 per domain."""
    if path is None:
        path = Path(str(resources.files("stylebot").joinpath("data", "evalset.json")))
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != "stylebot-evalset/1":
        raise ValueError(f"unsupported eval set format: {obj.get('format')!r}")
    items = [EvalItem(i["utterance"], i["expected_domain"]) for i in obj["items"]]
    return EvalSet(items=items, composition=dict(obj.get("composition", {})))


def vocabulary_overlap(
    responses: Sequence[Sequence[str]],
    style_vocab: set[str] | frozenset[str],
    by_types: bool = False,
) -> float:
    """Percentage of response tokens found in the style vocabulary,
    micro-averaged over all responses. by_types=True counts distinct words
    instead of running tokens."""
    if by_types:
        types = {t for r in responses for t in r}
        if not types:
            raise ValueError("no response tokens")
        return 100.0 * sum(1 for t in types if t in style_vocab) / len(types)
    total = 0
    hits = 0
    for r in responses:
        for t in r:
            total += 1
            if t in style_vocab:
                hits += 1
    if total == 0:
        raise ValueError("no response tokens")
    return 100.0 * hits / total


@dataclass
class EvalRow:
    input: str
    response: str | None
    route: str | None
    perplexity: float | None
    overlap: float | None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "input": self.input,
            "response": self.response,
            "route": self.route,
            "perplexity": self.perplexity,
            "overlap": self.overlap,
            "error": self.error,
        }


@dataclass
class EvalReport:
    average_perplexity: float
    vocabulary_overlap: float
    rows: list[EvalRow]
    annotation_aggregates: dict[str, float] | None = None

    def to_json(self) -> dict:
        obj = {
            "format": "stylebot-evalreport/1",
            "average_perplexity": self.average_perplexity,
            "vocabulary_overlap": self.vocabulary_overlap,
            "rows": [r.to_json() for r in self.rows],
        }
        if self.annotation_aggregates is not None:
            obj["annotation_aggregates"] = dict(self.annotation_aggregates)
        return obj

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def to_table(self) -> str:
        lines = [
            f"average_perplexity  {self.average_perplexity:.4f}",
            f"vocabulary_overlap  {self.vocabulary_overlap:.2f}%",
            "",
            f"{'input':<34} {'route':<10} {'ppl':>10} {'overlap%':>9}  response",
        ]
        for r in self.rows:
            if r.error:
                lines.append(f"{r.input:<34} ERROR: {r.error}")
                continue
            lines.append(
                f"{r.input:<34} {r.route:<10} {r.perplexity:>10.3f} {r.overlap:>9.2f}  {r.response}"
            )
        return "\n".join(lines)


def run_eval(
    engine: Engine,
    eval_set: EvalSet,
    style_lm: BigramLM,
    style_vocab: set[str] | frozenset[str],
) -> EvalReport:
    """Respond to every item; report token-weighted average perplexity of the
    responses under the style LM, vocabulary overlap, and per-item rows.
    Per-item failures land in the row's error field and the run continues."""
    rows: list[EvalRow] = []
    responses: list[tuple[str, ...]] = []
    for idx, item in enumerate(eval_set.items):
        try:
            final, trace = respond(engine, tokenize(item.utterance), f"eval-{idx}")
            responses.append(final)
            rows.append(
                EvalRow(
                    input=item.utterance,
                    response=" ".join(final),
                    route=trace.route_label,
                    perplexity=perplexity(style_lm, final) if final else None,
                    overlap=vocabulary_overlap([final], style_vocab) if final else None,
                )
            )
        except Exception as exc:  # per-item errors propagate into the row
            rows.append(
                EvalRow(
                    input=item.utterance, response=None, route=None,
                    perplexity=None, overlap=None, error=str(exc),
                )
            )
    if responses:
        total_lp = sum(log_prob(style_lm, r) for r in responses)
        total_n = sum(len(r) + 1 for r in responses)
        import math

        avg_ppl = math.exp(-total_lp / total_n)
        overlap = vocabulary_overlap(responses, style_vocab)
    else:
        avg_ppl = float("nan")
        overlap = float("nan")
    return EvalReport(average_perplexity=avg_ppl, vocabulary_overlap=overlap, rows=rows)


@dataclass
class AnnotationSheet:
    """Binary grammar/coherence/style scores per (annotator, item)."""

    annotators: list[str]
    items: list[str]
    cells: dict[tuple[str, str], dict[str, int]]


def aggregate_annotations(sheet: AnnotationSheet) -> dict[str, float]:
    """Per-metric percentage over all A*I cells plus their arithmetic mean."""
    missing = []
    for annotator in sheet.annotators:
        for item in sheet.items:
            cell = sheet.cells.get((annotator, item))
            if cell is None:
                missing.extend(f"({annotator}, {item}, {m})" for m in METRICS)
                continue
            for m in METRICS:
                if cell.get(m) not in (0, 1):
                    missing.append(f"({annotator}, {item}, {m})")
    if missing:
        raise ValueError("missing cells: " + ", ".join(missing))
    denom = len(sheet.annotators) * len(sheet.items)
    result = {}
    for m in METRICS:
        total = sum(sheet.cells[(a, i)][m] for a in sheet.annotators for i in sheet.items)
        result[m] = 100.0 * total / denom
    result["average"] = sum(result[m] for m in METRICS) / len(METRICS)
    return result


def read_annotation_csv(path: str | Path) -> AnnotationSheet:
    """Parse `annotator,item,grammar,coherence,style` rows (extra columns,
    e.g. from the emitted template, are ignored)."""
    annotators: list[str] = []
    items: list[str] = []
    cells: dict[tuple[str, str], dict[str, int]] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            annotator = (row.get("annotator") or "").strip()
            item = (row.get("item") or "").strip()
            if annotator and annotator not in annotators:
                annotators.append(annotator)
            if item and item not in items:
                items.append(item)
            scores = {}
            for m in METRICS:
                raw = (row.get(m) or "").strip()
                if raw in ("0", "1"):
                    scores[m] = int(raw)
            cells[(annotator, item)] = scores
    if not annotators:
        raise ValueError("missing cells: no annotator column values present")
    return AnnotationSheet(annotators=annotators, items=items, cells=cells)


def emit_annotation_template(report: EvalReport, path: str | Path) -> None:
    """CSV with one row per eval item; annotator and the three binary score
    columns are left blank for the annotator to fill."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["annotator", "item", "input", "response", *METRICS])
        for idx, row in enumerate(report.rows):
            writer.writerow(["", f"item-{idx}", row.input, row.response or "", "", "", ""])

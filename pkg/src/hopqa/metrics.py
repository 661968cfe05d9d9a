"""Answer-quality, path-quality, efficiency, and error-taxonomy metrics."""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .decompose import Question
from .engine import PartialReasoningPath

CORRECT = "correct"
RETRIEVAL_ERROR = "retrieval_error"
REASONING_ERROR = "reasoning_error"

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    return text.casefold().strip().translate(_PUNCT_TABLE).strip()


def _norm_set(items: Iterable[str], normalize: bool) -> set[str]:
    if normalize:
        return {normalize_answer(x) for x in items}
    return set(items)


def hit_at_1(predicted: list[str], gold: set[str], normalize: bool = True) -> int:
    """1 iff the first prediction exactly matches any gold answer."""
    if not gold:
        raise ValueError("gold must be nonempty")
    if not predicted:
        return 0
    first = normalize_answer(predicted[0]) if normalize else predicted[0]
    return int(first in _norm_set(gold, normalize))


def answer_f1(predicted: list[str], gold: set[str], normalize: bool = True) -> float:
    """Set F1 of predicted vs gold answers."""
    if not gold:
        raise ValueError("gold must be nonempty")
    pred = _norm_set(predicted, normalize)
    gold_n = _norm_set(gold, normalize)
    if not pred:
        return 0.0
    overlap = len(pred & gold_n)
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(gold_n)
    return 2 * precision * recall / (precision + recall)


def path_entities(paths: list[PartialReasoningPath]) -> set[str]:
    out: set[str] = set()
    for path in paths:
        out.add(path.source)
        for triple in path.triples:
            out.add(triple.head)
            out.add(triple.tail)
    return out


def entity_metrics(
    paths: list[PartialReasoningPath],
    gold: set[str],
    labeler=None,
    normalize: bool = True,
) -> tuple[float, int, int]:
    """(recall of gold entities in paths, hit flag, unique entity count)."""
    entities = path_entities(paths)
    labels = set(entities)
    if labeler is not None:
        labels |= {labeler(e) for e in entities}
    if not gold:
        return 0.0, 0, len(entities)
    found = _norm_set(labels, normalize) & _norm_set(gold, normalize)
    recall = len(found) / len(_norm_set(gold, normalize))
    return recall, int(recall > 0), len(entities)


def overlap_ratio(path_relations: set[str], gold_relations: set[str]) -> float:
    """Fraction of ground-truth relations covered by the explored paths."""
    if not gold_relations:
        raise ValueError("gold_relations must be nonempty")
    return len(path_relations & gold_relations) / len(gold_relations)


@dataclass
class QuestionResult:
    question: Question
    predicted: list[str]
    paths: list[PartialReasoningPath]
    llm_calls: int = 0
    tokens: int = 0
    wall_time: float = 0.0
    num_paths: int = 0
    num_context_paths: int = 0
    trace_ref: Optional[str] = None
    labeler: Optional[object] = None

    def error_class(self, normalize: bool = True) -> str:
        return classify_error(self, self.question.gold_answers or set(), normalize)


def classify_error(result: QuestionResult, gold: set[str], normalize: bool = True) -> str:
    """correct > retrieval_error (gold absent from every path) > reasoning_error."""
    if not gold:
        raise ValueError("gold must be nonempty")
    if hit_at_1(result.predicted, gold, normalize):
        return CORRECT
    recall, hit, _ = entity_metrics(result.paths, gold, result.labeler, normalize)
    return REASONING_ERROR if hit else RETRIEVAL_ERROR


@dataclass
class MetricsReport:
    hit_at_1: float = 0.0
    f1: float = 0.0
    entity_recall: float = 0.0
    entity_hit: float = 0.0
    avg_entities: float = 0.0
    overlap_mean: Optional[float] = None
    overlap_full_fraction: Optional[float] = None
    overlap_none_fraction: Optional[float] = None
    retrieval_error_rate: float = 0.0
    reasoning_error_rate: float = 0.0
    avg_calls: float = 0.0
    avg_tokens: float = 0.0
    avg_paths: float = 0.0
    avg_context_paths: float = 0.0
    avg_time: float = 0.0
    num_questions: int = 0
    per_question: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "per_question"}
        return out


def aggregate(
    results: list[QuestionResult],
    normalize: bool = True,
) -> MetricsReport:
    """Macro-average per-question metrics into one report (deterministic:
    results are processed in question-id order)."""
    report = MetricsReport(num_questions=len(results))
    if not results:
        return report
    results = sorted(results, key=lambda r: r.question.id)
    overlaps: list[float] = []
    for res in results:
        gold = res.question.gold_answers or set()
        hit = hit_at_1(res.predicted, gold, normalize) if gold else 0
        f1 = answer_f1(res.predicted, gold, normalize) if gold else 0.0
        recall, ehit, n_entities = entity_metrics(res.paths, gold, res.labeler, normalize)
        error = classify_error(res, gold, normalize) if gold else "n/a"
        row = {
            "id": res.question.id,
            "hit": hit,
            "f1": f1,
            "entity_recall": recall,
            "entity_hit": ehit,
            "entities": n_entities,
            "error_class": error,
            "calls": res.llm_calls,
            "tokens": res.tokens,
            "paths": res.num_paths,
            "context_paths": res.num_context_paths,
            "time": res.wall_time,
        }
        if res.question.gold_relations:
            used = {t.relation for p in res.paths for t in p.triples}
            row["overlap"] = overlap_ratio(used, res.question.gold_relations)
            overlaps.append(row["overlap"])
        else:
            row["overlap"] = None
        report.per_question.append(row)
    n = len(results)
    rows = report.per_question
    report.hit_at_1 = sum(r["hit"] for r in rows) / n
    report.f1 = sum(r["f1"] for r in rows) / n
    report.entity_recall = sum(r["entity_recall"] for r in rows) / n
    report.entity_hit = sum(r["entity_hit"] for r in rows) / n
    report.avg_entities = sum(r["entities"] for r in rows) / n
    report.retrieval_error_rate = sum(r["error_class"] == RETRIEVAL_ERROR for r in rows) / n
    report.reasoning_error_rate = sum(r["error_class"] == REASONING_ERROR for r in rows) / n
    report.avg_calls = sum(r["calls"] for r in rows) / n
    report.avg_tokens = sum(r["tokens"] for r in rows) / n
    report.avg_paths = sum(r["paths"] for r in rows) / n
    report.avg_context_paths = sum(r["context_paths"] for r in rows) / n
    report.avg_time = sum(r["time"] for r in rows) / n
    if overlaps:
        report.overlap_mean = sum(overlaps) / len(overlaps)
        report.overlap_full_fraction = sum(o == 1.0 for o in overlaps) / len(overlaps)
        report.overlap_none_fraction = sum(o == 0.0 for o in overlaps) / len(overlaps)
    return report

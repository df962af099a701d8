"""Strict exact match (SEM) and answer-level F1 over answer sets."""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from temporal_qa.core import AnswerSet


class MetricError(ValueError):
    pass


class EmptyGold(MetricError):
    pass


class EmptyRun(MetricError):
    pass


_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


def normalize_answer(text: str) -> str:
    """Lower text and remove punctuation, articles and extra whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def _normalized(answers: Iterable[str]) -> set[str]:
    return {n for n in map(normalize_answer, answers) if n}


def sem_score(pred: AnswerSet, gold: AnswerSet) -> int:
    """1 iff the normalized prediction set equals the normalized gold set."""
    gold_set = _normalized(gold)
    if not gold_set:
        raise EmptyGold("gold answer set is empty")
    return int(_normalized(pred) == gold_set)


def answer_f1(pred: AnswerSet, gold: AnswerSet) -> float:
    gold_set = _normalized(gold)
    if not gold_set:
        raise EmptyGold("gold answer set is empty")
    pred_set = _normalized(pred)
    matches = len(pred_set & gold_set)
    if matches == 0:
        return 0.0
    precision = matches / len(pred_set)
    recall = matches / len(gold_set)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class QuestionScore:
    sem: int
    f1: float

    def __post_init__(self):
        if self.sem not in (0, 1):
            raise ValueError(f"sem must be 0 or 1, got {self.sem}")
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 out of range: {self.f1}")
        if self.sem == 1 and self.f1 != 1.0:
            raise ValueError("sem = 1 requires f1 = 1")


def score(pred: AnswerSet, gold: AnswerSet) -> QuestionScore:
    return QuestionScore(sem_score(pred, gold), answer_f1(pred, gold))


ZERO = QuestionScore(0, 0.0)


@dataclass(frozen=True)
class ItemResult:
    item_id: str
    score: QuestionScore
    predicted: AnswerSet
    group: str = ""


@dataclass
class EvalReport:
    method: str
    split: str
    n: int
    sem_pct: float
    f1_pct: float
    per_item: list[ItemResult] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "split": self.split,
            "n": self.n,
            "sem_pct": self.sem_pct,
            "f1_pct": self.f1_pct,
            "per_item": [
                {"id": r.item_id, "group": r.group, "sem": r.score.sem, "f1": r.score.f1,
                 "predicted": list(r.predicted.entities)}
                for r in self.per_item
            ],
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        return cls(
            method=d["method"],
            split=d["split"],
            n=d["n"],
            sem_pct=d["sem_pct"],
            f1_pct=d["f1_pct"],
            per_item=[
                ItemResult(r["id"], QuestionScore(r["sem"], r["f1"]),
                           AnswerSet(tuple(r["predicted"])), r.get("group", ""))
                for r in d["per_item"]
            ],
            failures=list(d.get("failures", [])),
        )

    def groups(self) -> dict[str, tuple[float, float, int]]:
        """(sem_pct, f1_pct, n) for each item group, in first-seen order."""
        buckets: dict[str, list[QuestionScore]] = {}
        for r in self.per_item:
            buckets.setdefault(r.group or self.split, []).append(r.score)
        return {g: (*_means(s), len(s)) for g, s in buckets.items()}


def _means(scores: Sequence[QuestionScore]) -> tuple[float, float]:
    n = len(scores)
    return (100.0 * sum(s.sem for s in scores) / n,
            100.0 * sum(s.f1 for s in scores) / n)


def aggregate_report(scores: Sequence[QuestionScore | ItemResult], method: str, split: str,
                     failures: list[dict] | None = None) -> EvalReport:
    """Macro-average per-question scores into percentages.

    ``scores`` may be bare :class:`QuestionScore` values or full
    :class:`ItemResult` rows; bare scores get positional ids.
    """
    if not scores:
        raise EmptyRun("no scored items")
    items = [
        s if isinstance(s, ItemResult) else ItemResult(str(i), s, AnswerSet())
        for i, s in enumerate(scores)
    ]
    sem_pct, f1_pct = _means([r.score for r in items])
    return EvalReport(method, split, len(items), sem_pct, f1_pct, items, list(failures or []))

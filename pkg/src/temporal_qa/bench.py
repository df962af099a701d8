"""Evaluation harness: datasets, sampling, synthetic corpora and pipeline runs."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from temporal_qa.core import (
    After,
    AnswerSet,
    At,
    Before,
    FactEntry,
    TemporalError,
    TimeInterval,
    Timeline,
    TimePoint,
    oracle_solve,
    solve,
)
from temporal_qa.gateway import (
    DEFAULT_IN_FLIGHT,
    DEFAULT_MAX_TOKENS,
    EXTRACTION_STOP,
    Backend,
    CompletionRequest,
    FixtureBackend,
    complete_many,
)
from temporal_qa.grammar import (
    EntityRef,
    Extraction,
    ExtractionError,
    TimeRef,
    parse_extraction_block,
    render_context,
    render_extraction_block,
)
from temporal_qa.metrics import ZERO, EvalReport, ItemResult, aggregate_report, score
from temporal_qa.report import emit_report
from temporal_qa.prompts import (
    EmptyAnswer,
    Method,
    build_no_exec_prompt,
    build_prompt,
    exemplar_for,
    parse_model_answer,
    solver_source,
)

logger = logging.getLogger(__name__)

SPLITS = ("L2", "L3", "easy", "hard")


class ConfigError(ValueError):
    pass


class SchemaError(ConfigError):
    def __init__(self, line: int, field: str, detail: str = ""):
        super().__init__(f"line {line}: bad or missing field {field!r}" + (f" ({detail})" if detail else ""))
        self.line = line
        self.field = field


class SampleTooLarge(ConfigError):
    pass


@dataclass(frozen=True)
class DatasetItem:
    id: str
    question: str
    context: str
    gold: AnswerSet
    split: str
    multi: bool

    @property
    def group(self) -> str:
        return f"{self.split} {'Multi' if self.multi else 'Single'}"

    def to_json(self) -> dict:
        return {"id": self.id, "question": self.question, "context": self.context,
                "answers": list(self.gold.entities), "split": self.split}


def load_dataset(path: str | Path) -> list[DatasetItem]:
    """Read line-delimited JSON items; ``multi`` is inferred from the gold count."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    items = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(lineno, "<json>", str(exc)) from None
            if not isinstance(row, dict):
                raise SchemaError(lineno, "<json>", "not an object")
            for name in ("id", "question", "context", "split"):
                if not isinstance(row.get(name), str):
                    raise SchemaError(lineno, name)
            answers = row.get("answers")
            if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
                raise SchemaError(lineno, "answers")
            gold = AnswerSet(tuple(a.strip() for a in answers if a.strip()))
            if not gold:
                raise SchemaError(lineno, "answers", "empty gold")
            if row["split"] not in SPLITS:
                raise SchemaError(lineno, "split", f"expected one of {SPLITS}")
            items.append(DatasetItem(row["id"], row["question"], row["context"], gold,
                                     row["split"], len(gold) > 1))
    return items


def write_dataset(items: Sequence[DatasetItem], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_json(), ensure_ascii=False) + "\n")


def sample_items(items: Sequence[DatasetItem], n: int, seed: Optional[int]) -> list[DatasetItem]:
    """Uniform sample without replacement, kept in the original order."""
    if n <= 0:
        raise ConfigError("sample size must be positive")
    if n > len(items):
        raise SampleTooLarge(f"cannot sample {n} of {len(items)} items")
    if n == len(items):
        return list(items)
    if seed is None:
        raise ConfigError("a seed is required when sampling fewer items than the dataset holds")
    picked = sorted(random.Random(seed).sample(range(len(items)), n))
    return [items[i] for i in picked]


def case_studies() -> tuple[Path, Path]:
    """Paths of the shipped two-item case-study dataset and its replay store."""
    root = Path(str(resources.files("temporal_qa").joinpath("data/case_studies")))
    return root / "dataset.jsonl", root / "replay"


# -- synthetic corpus --------------------------------------------------------

_FIRST = ["Alain", "Paul", "Richard", "Maria", "Chen", "Olga", "Kwame", "Ines", "Tomas",
          "Aiko", "Lars", "Priya", "Diego", "Fatima", "Ivan", "Nora"]
_LAST = ["Roche", "Abrahams", "Tol", "Santos", "Wei", "Petrova", "Mensah", "Duarte",
         "Novak", "Tanaka", "Berg", "Iyer", "Ramos", "Haddad", "Sokolov", "Lindqvist"]
_PLACES = ["Auxerre", "Hamburg", "Sussex", "Valencia", "Chesham", "Canvey", "Heybridge",
           "Colchester", "Wivenhoe", "Amsterdam", "Montgomery", "Leeds", "Porto", "Lyon",
           "Bergen", "Kyoto", "Dublin", "Austin", "Turin", "Graz"]

# (predicate phrase, entity templates, question stems for at / before / after)
_RELATIONS = [
    ("plays for", ["{p} United F.C.", "{p} Town F.C.", "A.S. {p}", "{p} Rovers", "{p} CF"],
     "Which team did {s} play for in {t}?",
     "Which team did {s} play for before {r}?",
     "Which team did {s} play for after {r}?"),
    ("works for", ["University of {p}", "{p} Institute of Technology", "{p} Research Centre",
                   "Bank of {p}", "{p} & Partners Ltd."],
     "Which employer did {s} work for in {t}?",
     "Which employer did {s} work for before {r}?",
     "Which employer did {s} work for after {r}?"),
    ("is owned by", ["{p} Holdings", "The {p} Group", "{p} Capital Inc.", "{p} Estates",
                     "St. {p} Trust"],
     "Who was the owner of {s} in {t}?",
     "Who was the owner of {s} before {r}?",
     "Who was the owner of {s} after {r}?"),
]


def _random_timeline(rng: random.Random, entities: list[str]) -> Timeline:
    """2-8 monthly facts laid out in sequence with occasional overlaps and gaps."""
    cursor = TimePoint(rng.randint(1950, 2000), rng.randint(1, 12)).index
    entries = []
    for name in entities:
        length = rng.randint(0, 72)
        start = cursor
        end = start + length
        entries.append(FactEntry(TimeInterval(TimePoint.from_index(start), TimePoint.from_index(end)), name))
        r = rng.random()
        if r < 0.25 and length > 0:
            cursor = end - rng.randint(0, min(length, 12))   # overlap or touch
        elif r < 0.5:
            cursor = end
        else:
            cursor = end + rng.randint(1, 24)
    rng.shuffle(entries)
    return Timeline(tuple(entries))


def generate_synthetic(count: int, seed: int) -> list[tuple[DatasetItem, Extraction]]:
    """Oracle-labelled items in TempReason surface style, with their true extraction."""
    if count <= 0:
        raise ConfigError("count must be positive")
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        predicate, templates, q_at, q_before, q_after = rng.choice(_RELATIONS)
        subject = f"{rng.choice(_FIRST)} {rng.choice(_LAST)}"
        if predicate == "is owned by":
            subject = f"{rng.choice(_PLACES)} Plaza"
        n_facts = rng.randint(2, 8)
        names: list[str] = []
        while len(names) < n_facts:
            name = rng.choice(templates).format(p=rng.choice(_PLACES))
            if name not in names:
                names.append(name)
        timeline = _random_timeline(rng, names)
        kind = rng.choice(("at", "before", "after"))
        if kind == "at":
            fact = rng.choice(timeline.entries)
            t = TimePoint.from_index(rng.randint(fact.interval.start.index, fact.interval.end.index))
            extraction = Extraction(timeline, "at", TimeRef(t))
            question = q_at.format(s=subject, t=t)
            split = "L2"
        else:
            ref = rng.choice(timeline.entities())
            extraction = Extraction(timeline, kind, EntityRef(ref))
            question = (q_before if kind == "before" else q_after).format(s=subject, r=ref)
            split = "L3"
        query = At(extraction.ref.t) if kind == "at" else (
            Before(ref) if kind == "before" else After(ref))
        gold = oracle_solve(timeline, query)
        if not gold:
            continue
        item = DatasetItem(f"synth-{seed}-{len(out):05d}", question,
                           render_context(timeline, subject, predicate), gold, split, len(gold) > 1)
        out.append((item, extraction))
    return out


def bypass_backend(corpus: Sequence[tuple[DatasetItem, Extraction]], model_id: str,
                   max_tokens: int = DEFAULT_MAX_TOKENS) -> FixtureBackend:
    """Fixture backend answering every extraction prompt with the true block."""
    backend = FixtureBackend()
    for item, extraction in corpus:
        prompt = build_prompt(Method.EXTRACT_CODE, item.question, item.context, item.multi)
        block = render_extraction_block(extraction)
        # the prompt already ends with the "extracted_info = " cue
        backend.add(_request(Method.EXTRACT_CODE, prompt, model_id, max_tokens),
                    block[len("extracted_info = "):])
    return backend


# -- pipeline ----------------------------------------------------------------

@dataclass
class RunConfig:
    method: Method
    dataset: Path
    backend: Backend
    model_id: str
    n: Optional[int] = None
    seed: Optional[int] = None
    out_dir: Optional[Path] = None
    max_tokens: int = DEFAULT_MAX_TOKENS
    max_in_flight: int = DEFAULT_IN_FLIGHT


def _request(method: Method, prompt: str, model_id: str, max_tokens: int) -> CompletionRequest:
    stop = EXTRACTION_STOP if method in (Method.EXTRACT_CODE, Method.EXTRACT_CODE_NOEXEC) else ()
    return CompletionRequest(prompt, model_id, 0.0, max_tokens, stop)


def _as_block(completion: str) -> str:
    if "extracted_info" in completion:
        return completion
    return "extracted_info = " + completion


def run_items(items: Sequence[DatasetItem], method: Method, backend: Backend, model_id: str,
              split: str = "", max_tokens: int = DEFAULT_MAX_TOKENS,
              max_in_flight: int = DEFAULT_IN_FLIGHT) -> EvalReport:
    """Score ``items`` under ``method``.

    Per-item model-output problems (unparseable blocks, unknown references,
    empty answers) score zero and are listed in ``failures``; backend
    errors such as a replay miss propagate.
    """
    reqs = [_request(method, build_prompt(method, it.question, it.context, it.multi),
                     model_id, max_tokens) for it in items]
    completions = complete_many(reqs, backend, max_in_flight)

    predictions: list[Optional[AnswerSet]] = [None] * len(items)
    failures: list[dict] = []

    def fail(i: int, stage: str, exc: Exception):
        failures.append({"id": items[i].id, "stage": stage, "error": f"{type(exc).__name__}: {exc}"})

    if method in (Method.EXTRACT_CODE, Method.EXTRACT_CODE_NOEXEC):
        extractions: list[Optional[Extraction]] = []
        for i, text in enumerate(completions):
            try:
                extractions.append(parse_extraction_block(_as_block(text)))
            except (ExtractionError, TemporalError) as exc:
                extractions.append(None)
                fail(i, "extraction", exc)
        if method is Method.EXTRACT_CODE:
            for i, x in enumerate(extractions):
                if x is None:
                    continue
                try:
                    predictions[i] = solve(x)
                except TemporalError as exc:
                    fail(i, "solve", exc)
        else:
            ex = exemplar_for(method, False)
            todo = [i for i, x in enumerate(extractions) if x is not None]
            second = [_request(method, build_no_exec_prompt(
                items[i].question, items[i].context, ex,
                render_extraction_block(extractions[i]), solver_source()),
                model_id, max_tokens) for i in todo]
            for i, text in zip(todo, complete_many(second, backend, max_in_flight)):
                try:
                    predictions[i] = parse_model_answer(text, Method.STANDARD, True)
                except EmptyAnswer as exc:
                    fail(i, "answer", exc)
    else:
        for i, text in enumerate(completions):
            try:
                predictions[i] = parse_model_answer(text, method, items[i].multi)
            except EmptyAnswer as exc:
                fail(i, "answer", exc)

    results = []
    for item, pred in zip(items, predictions):
        s = ZERO if pred is None else score(pred, item.gold)
        results.append(ItemResult(item.id, s, pred or AnswerSet(), item.group))
    if not split:
        split = "+".join(dict.fromkeys(it.split for it in items))
    return aggregate_report(results, method.label, split, failures)


def run_pipeline(cfg: RunConfig) -> EvalReport:
    items = load_dataset(cfg.dataset)
    if cfg.n is not None:
        items = sample_items(items, cfg.n, cfg.seed)
    if not items:
        raise ConfigError(f"dataset {cfg.dataset} is empty")
    report = run_items(items, cfg.method, cfg.backend, cfg.model_id,
                       max_tokens=cfg.max_tokens, max_in_flight=cfg.max_in_flight)
    if cfg.out_dir is not None:
        emit_report(report, cfg.out_dir)
    return report

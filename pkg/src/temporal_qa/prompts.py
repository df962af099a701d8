"""One-shot prompt builders for every method, and baseline answer parsing."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from temporal_qa.core import AnswerSet


class PromptError(ValueError):
    pass


class MissingExemplarField(PromptError):
    def __init__(self, name: str):
        super().__init__(f"exemplar lacks {name}")
        self.name = name


class EmptyAnswer(PromptError):
    pass


class Method(str, enum.Enum):
    STANDARD = "standard"
    COT_QCRA = "cot-qcra"
    COT_CQRA = "cot-cqra"
    COT_QCAR = "cot-qcar"
    COT_CQAR = "cot-cqar"
    EXTRACT_CODE = "extract-code"
    EXTRACT_CODE_NOEXEC = "extract-code-noexec"

    @property
    def ordering(self) -> Optional[str]:
        if self.value.startswith("cot-"):
            return self.value[4:].upper()
        return None

    @property
    def label(self) -> str:
        if self.ordering:
            return "CoT (" + "+".join(self.ordering) + ")"
        return {
            Method.STANDARD: "Standard",
            Method.EXTRACT_CODE: "Extraction + Code",
            Method.EXTRACT_CODE_NOEXEC: "Extraction + Code (w/o exec)",
        }[self]

    @property
    def is_cot(self) -> bool:
        return self.ordering is not None


COT_ORDERINGS = ("QCRA", "CQRA", "QCAR", "CQAR")
_LABELS = {"Q": "Question", "C": "Context", "R": "Reasoning", "A": "Answer"}


@dataclass(frozen=True)
class Exemplar:
    question: str
    context: str
    answer_text: str
    reasoning_text: Optional[str] = None
    extraction_block: Optional[str] = None


@lru_cache(maxsize=None)
def _library() -> dict:
    text = resources.files("temporal_qa").joinpath("data/exemplars.json").read_text("utf-8")
    return json.loads(text)


def load_exemplar(kind: str, multi: bool = False) -> Exemplar:
    """Fetch a shipped exemplar: ``kind`` is standard, cot or extraction."""
    lib = _library()
    key = kind if kind == "extraction" else f"{kind}/{'multi' if multi else 'single'}"
    return Exemplar(**lib[key])


def exemplar_for(method: Method, multi: bool) -> Exemplar:
    if method is Method.STANDARD:
        return load_exemplar("standard", multi)
    if method.is_cot:
        return load_exemplar("cot", multi)
    return load_exemplar("extraction")


@lru_cache(maxsize=None)
def solver_source() -> str:
    """The fixed ``solution()`` program shown to the model in the no-exec ablation."""
    return resources.files("temporal_qa").joinpath("data/solution.txt").read_text("utf-8")


def _instr(key: str) -> str:
    return _library()["instructions"][key]


def _arity(multi: bool) -> str:
    return _instr("multi" if multi else "single")


def build_extraction_prompt(question: str, context: str, ex: Exemplar) -> str:
    if not ex.extraction_block:
        raise MissingExemplarField("extraction_block")
    return "\n".join([
        _instr("extraction"),
        f"Question: {ex.question}",
        f"Context: {ex.context}",
        ex.extraction_block.strip(),
        "",
        f"Question: {question}",
        f"Context: {context}",
        "extracted_info = ",
    ])


def build_standard_prompt(question: str, context: str, ex: Exemplar, multi: bool) -> str:
    suffix = f"{_instr('grounding')} {_arity(multi)}"
    return "\n".join([
        f"Context: {ex.context}",
        f"Question: {ex.question} {suffix}",
        f"Answer: {ex.answer_text}",
        "",
        f"Context: {context}",
        f"Question: {question} {suffix}",
        "Answer:",
    ])


def build_cot_prompt(question: str, context: str, ex: Exemplar, ordering: str,
                     multi: bool = False) -> str:
    """Chain-of-thought prompt with the blocks in ``ordering`` (e.g. ``"CQRA"``)."""
    ordering = ordering.upper()
    if ordering not in COT_ORDERINGS:
        raise PromptError(f"unknown CoT ordering {ordering!r}")
    if not ex.reasoning_text:
        raise MissingExemplarField("reasoning_text")
    reason_first = ordering.index("R") < ordering.index("A")
    order_instr = _library()["cot_instructions"]["reason_first" if reason_first else "answer_first"]
    suffix = f"{_instr('grounding')} {order_instr} {_arity(multi)}"

    def blocks(q, c, r, a):
        values = {"Q": f"{q} {suffix}", "C": c, "R": r, "A": a}
        return [f"{_LABELS[k]}: {values[k]}" for k in ordering]

    shot = blocks(ex.question, ex.context, ex.reasoning_text, ex.answer_text)
    test = blocks(question, context, "", "")[:2]
    cue = "Reasoning:" if reason_first else "Answer:"
    return "\n".join([*shot, "", *test, cue])


def _program(question: str, context: str, block: str, source: str) -> list[str]:
    return [
        f"# Question: {question}",
        f"# Context: {context}",
        "from datetime import datetime",
        block.strip(),
        "",
        source.rstrip(),
        "print(solution())",
    ]


def build_no_exec_prompt(question: str, context: str, ex: Exemplar, extraction_block: str,
                         solver_source: str) -> str:
    """Show the solver program and ask the model for its printed output."""
    if not ex.extraction_block:
        raise MissingExemplarField("extraction_block")
    return "\n".join([
        _instr("no_exec"),
        "",
        *_program(ex.question, ex.context, ex.extraction_block, solver_source),
        f"Output: {ex.answer_text}",
        "",
        *_program(question, context, extraction_block, solver_source),
        "Output:",
    ])


def build_prompt(method: Method, question: str, context: str, multi: bool) -> str:
    """First-stage prompt for ``method`` with the shipped exemplar."""
    ex = exemplar_for(method, multi)
    if method is Method.STANDARD:
        return build_standard_prompt(question, context, ex, multi)
    if method.is_cot:
        return build_cot_prompt(question, context, ex, method.ordering, multi)
    return build_extraction_prompt(question, context, ex)


def _after_label(text: str, label: str, last: bool) -> str:
    i = text.rfind(label) if last else text.find(label)
    return text if i < 0 else text[i + len(label):]


def _strip_final_period(text: str) -> str:
    # keep the period of a trailing abbreviation such as "F.C."
    if text.endswith(".") and "." not in text[:-1].rsplit(" ", 1)[-1]:
        return text[:-1].rstrip()
    return text


def parse_model_answer(text: str, method: Method, multi: bool) -> AnswerSet:
    if method.is_cot:
        if method.ordering.index("R") < method.ordering.index("A"):
            text = _after_label(text, "Answer:", last=True)
        else:
            text = _after_label(text, "Answer:", last=False)
            cut = [i for i in (text.find("Reasoning:"), text.find("Reason:")) if i >= 0]
            if cut:
                text = text[:min(cut)]
    parts = text.split(",") if multi else [text]
    parts = [_strip_final_period(p.strip()) for p in parts]
    parts = [p for p in parts if p]
    if not parts:
        raise EmptyAnswer("no answer text in completion")
    return AnswerSet(tuple(parts))

"""Parsers for fact-sentence contexts and model-emitted extraction blocks.

The extraction block is data, never code: it is read with a small
recursive-descent parser over this grammar::

    block       := ws assign_info ws [assign_rel ws] assign_ref ws
    assign_info := "extracted_info" ws "=" ws "{" ws [pair ("," ws pair)* [","]] ws "}"
    pair        := "(" ws date ws "," ws date ws ")" ws ":" ws string
    date        := "datetime(" ws int ws "," ws int ws "," ws int ws ")"
    assign_rel  := "t_relation" ws "=" ws string
    assign_ref  := "ref_obj" ws "=" ws (string | date)
    string      := '"' chars '"' | "'" chars "'"
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from temporal_qa.core import (
    MONTH_ABBR,
    After,
    At,
    Before,
    FactEntry,
    Granularity,
    RelationUnsupported,
    TemporalQuery,
    TimeInterval,
    Timeline,
    TimePoint,
)

RELATIONS = ("at", "before", "after")


class ExtractionError(ValueError):
    pass


class UnrecognizedTimeExpression(ExtractionError):
    pass


class EmptyContext(ExtractionError):
    pass


class MissingField(ExtractionError):
    def __init__(self, name: str):
        super().__init__(f"missing field: {name}")
        self.name = name


class BlockSyntaxError(ExtractionError):
    def __init__(self, position: int, expected: str, found: str = ""):
        msg = f"at offset {position}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)
        self.position = position
        self.expected = expected


@dataclass(frozen=True)
class TimeRef:
    t: TimePoint


@dataclass(frozen=True)
class EntityRef:
    name: str


Ref = Union[TimeRef, EntityRef]


@dataclass(frozen=True)
class Extraction:
    timeline: Timeline
    relation: str
    ref: Ref

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise RelationUnsupported(self.relation)
        if (self.relation == "at") != isinstance(self.ref, TimeRef):
            raise ExtractionError(
                f"relation {self.relation!r} does not fit reference {self.ref!r}")

    def query(self) -> TemporalQuery:
        if isinstance(self.ref, TimeRef):
            return At(self.ref.t)
        return Before(self.ref.name) if self.relation == "before" else After(self.ref.name)


# -- time expressions ------------------------------------------------------

_MONTHS = {name.lower(): i + 1 for i, name in enumerate(MONTH_ABBR)}
_MONTH_YEAR = re.compile(r"([A-Za-z]{3}),\s?(\d{4})")
_YEAR = re.compile(r"\d{4}")


def parse_timepoint(text: str) -> TimePoint:
    """Parse ``"Jan, 1995"`` (monthly) or ``"1998"`` (yearly, pinned to January)."""
    text = text.strip()
    m = _MONTH_YEAR.fullmatch(text)
    if m and m.group(1).lower() in _MONTHS:
        return TimePoint(int(m.group(2)), _MONTHS[m.group(1).lower()])
    if _YEAR.fullmatch(text):
        return TimePoint(int(text), 1, Granularity.YEARLY)
    raise UnrecognizedTimeExpression(f"unrecognized time expression: {text!r}")


# -- context sentences -----------------------------------------------------

@dataclass
class ParseDiagnostics:
    skipped_sentences: list[tuple[int, str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.skipped_sentences or self.warnings)


# Verb phrases seen in TempReason/TimeQA fact sentences.  Longest first so
# "is the head of the government of" wins over "is the head of".
PREDICATES = sorted([
    "works for", "worked for", "plays for", "played for", "is owned by", "was owned by",
    "is a member of", "was a member of", "holds the position of", "held the position of",
    "is the head of the government of", "is the head of", "is the head coach of",
    "is the chair of", "is the chairperson of", "is married to", "was married to",
    "attended", "attends", "is employed by", "was employed by", "is affiliated with",
    "is a student at", "is educated at", "was educated at", "is coached by",
    "is a part of", "is located in", "is the capital of", "is led by", "leads",
], key=len, reverse=True)

# A sentence ends at a period that follows a 4-digit year, or a lowercase
# word of 3+ letters, and is followed by whitespace.  Abbreviations such as
# "A.J." or "F.C." never end a sentence.
_SENTENCE_END = re.compile(r"(?:(?<=\b\d{4})|(?<=\b[a-z]{3})|(?<=[a-z]{4}))\.(?=\s|$)")


def _split_sentences(text: str) -> list[tuple[int, str]]:
    out = []
    pos = 0
    for m in _SENTENCE_END.finditer(text):
        chunk = text[pos:m.end()]
        if chunk.strip():
            lead = len(chunk) - len(chunk.lstrip())
            out.append((pos + lead, chunk.strip()))
        pos = m.end()
    tail = text[pos:]
    if tail.strip():
        lead = len(tail) - len(tail.lstrip())
        out.append((pos + lead, tail.strip()))
    return out


def _entity_from_head(head: str) -> str | None:
    """Pick the entity out of ``<subject> <predicate> <ENTITY>``."""
    padded = f" {head} "
    best = None
    for pred in PREDICATES:
        i = padded.find(f" {pred} ")
        if i >= 0 and (best is None or i < best[0]):
            best = (i, pred)
    if best is not None:
        i, pred = best
        return padded[i + len(pred) + 2:].strip() or None
    # fallback: subject is the leading capitalized run, predicate the next
    # lowercase run, and the entity everything after it
    tokens = head.split()
    k = 0
    while k < len(tokens) and not tokens[k][:1].islower():
        k += 1
    if k == 0 or k == len(tokens):
        return None
    while k < len(tokens) and tokens[k][:1].islower():
        k += 1
    rest = " ".join(tokens[k:])
    return rest or None


def parse_sentence(sentence: str) -> FactEntry:
    """Convert one ``<text> from <TIME> to <TIME>.`` sentence to a fact."""
    body = sentence.strip()
    if not body.endswith("."):
        raise ExtractionError("sentence is not period-terminated")
    body = body[:-1]
    left, sep, end_text = body.rpartition(" to ")
    if not sep:
        raise ExtractionError("no ' to ' anchor")
    head, sep, start_text = left.rpartition(" from ")
    if not sep:
        raise ExtractionError("no ' from ' anchor")
    start = parse_timepoint(start_text)
    end = parse_timepoint(end_text)
    if end < start:
        raise ExtractionError(f"interval ends before it starts ({start_text} > {end_text})")
    entity = _entity_from_head(head)
    if entity is None:
        raise ExtractionError("cannot locate entity phrase")
    return FactEntry(TimeInterval(start, end), entity)


def parse_context(text: str) -> tuple[Timeline, ParseDiagnostics]:
    diagnostics = ParseDiagnostics()
    entries = []
    for offset, sentence in _split_sentences(text):
        line = text.count("\n", 0, offset) + 1
        try:
            entries.append(parse_sentence(sentence))
        except ExtractionError as exc:
            diagnostics.skipped_sentences.append((line, sentence, str(exc)))
    if not entries:
        raise EmptyContext("no fact sentence could be parsed from the context")
    timeline = Timeline(tuple(entries))
    if len(timeline) < len(entries):
        diagnostics.warnings.append(
            f"{len(entries) - len(timeline)} duplicate fact(s) dropped")
    return timeline, diagnostics


def render_context(timeline: Timeline, subject: str, predicate: str) -> str:
    return " ".join(
        f"{subject} {predicate} {e.entity} {e.interval}." for e in timeline)


# -- extraction blocks -----------------------------------------------------

_FIELDS = ("extracted_info", "t_relation", "ref_obj")


class _BlockParser:
    def __init__(self, text: str, pos: int = 0):
        self.text = text
        self.pos = pos

    def error(self, expected: str):
        return BlockSyntaxError(self.pos, expected, self.text[self.pos:self.pos + 12])

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, literal: str) -> bool:
        return self.text.startswith(literal, self.pos)

    def expect(self, literal: str):
        self.ws()
        if not self.peek(literal):
            raise self.error(repr(literal))
        self.pos += len(literal)

    def maybe(self, literal: str) -> bool:
        self.ws()
        if self.peek(literal):
            self.pos += len(literal)
            return True
        return False

    def identifier(self) -> str | None:
        self.ws()
        m = re.compile(r"[A-Za-z_]\w*").match(self.text, self.pos)
        return m.group(0) if m else None

    def integer(self) -> int:
        self.ws()
        m = re.compile(r"[+-]?\d+").match(self.text, self.pos)
        if not m:
            raise self.error("integer")
        self.pos = m.end()
        return int(m.group(0))

    def string(self) -> str:
        self.ws()
        if self.pos >= len(self.text) or self.text[self.pos] not in "\"'":
            raise self.error("quoted string")
        quote = self.text[self.pos]
        self.pos += 1
        chars = []
        while True:
            if self.pos >= len(self.text):
                raise self.error(f"closing {quote}")
            ch = self.text[self.pos]
            if ch == "\\" and self.pos + 1 < len(self.text):
                chars.append(self.text[self.pos + 1])
                self.pos += 2
                continue
            self.pos += 1
            if ch == quote:
                return "".join(chars)
            chars.append(ch)

    def date(self) -> TimePoint:
        start = self.pos
        self.expect("datetime")
        self.expect("(")
        year = self.integer()
        self.expect(",")
        month = self.integer()
        self.expect(",")
        day = self.integer()
        self.expect(")")
        if not 1 <= month <= 12:
            raise BlockSyntaxError(start, "month in 1..12", str(month))
        if not 1 <= day <= 31:
            raise BlockSyntaxError(start, "day in 1..31", str(day))
        # day precision is dropped
        return TimePoint(year, month)

    def pair(self) -> FactEntry:
        self.expect("(")
        start = self.date()
        self.expect(",")
        end = self.date()
        self.expect(")")
        self.expect(":")
        entity = self.string()
        try:
            return FactEntry(TimeInterval(start, end), entity)
        except ValueError as exc:
            raise BlockSyntaxError(self.pos, "well-formed fact", str(exc)) from None

    def info(self) -> Timeline:
        self.expect("{")
        entries = []
        while not self.maybe("}"):
            entries.append(self.pair())
            if not self.maybe(","):
                self.expect("}")
                break
        return Timeline(tuple(entries))

    def ref_value(self) -> Ref:
        self.ws()
        if self.peek("datetime"):
            return TimeRef(self.date())
        text = self.string()
        try:
            return TimeRef(parse_timepoint(text))
        except UnrecognizedTimeExpression:
            return EntityRef(text.strip())


def parse_extraction_block(text: str) -> Extraction:
    """Read an ``extracted_info`` / ``t_relation`` / ``ref_obj`` block.

    Leading prose before ``extracted_info`` and anything after the last
    recognised assignment are ignored.
    """
    m = re.search(r"\bextracted_info\s*=", text)
    if m is None:
        raise MissingField("extracted_info")
    p = _BlockParser(text, m.start())
    values: dict[str, object] = {}
    while True:
        name = p.identifier()
        if name not in _FIELDS:
            break
        if name in values:
            raise p.error(f"a single {name} assignment")
        p.pos += len(name)
        p.expect("=")
        if name == "extracted_info":
            values[name] = p.info()
        elif name == "t_relation":
            values[name] = p.string().strip().lower()
        else:
            values[name] = p.ref_value()

    if "ref_obj" not in values:
        raise MissingField("ref_obj")
    ref = values["ref_obj"]
    relation = values.get("t_relation")
    if relation is not None and relation not in RELATIONS:
        raise RelationUnsupported(relation)
    if relation is None:
        if isinstance(ref, EntityRef):
            raise MissingField("t_relation")
        relation = "at"
    return Extraction(values["extracted_info"], relation, ref)


def _render_date(t: TimePoint) -> str:
    return f"datetime({t.year}, {t.month}, 1)"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_extraction_block(x: Extraction) -> str:
    pairs = ", ".join(
        f"({_render_date(e.interval.start)}, {_render_date(e.interval.end)}): {_quote(e.entity)}"
        for e in x.timeline)
    lines = [f"extracted_info = {{{pairs}}}"]
    if isinstance(x.ref, TimeRef):
        lines.append(f"ref_obj = {_render_date(x.ref.t)}")
    else:
        lines.append(f"t_relation = {_quote(x.relation)}")
        lines.append(f"ref_obj = {_quote(x.ref.name)}")
    return "\n".join(lines)

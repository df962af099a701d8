"""Month-granularity temporal types and the deterministic query solver.

Intervals are closed on both ends.  ``before``/``after`` adjacency is
boundary-inclusive: a fact ending in the month the reference starts still
counts as "before" it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

import numpy as np

MONTH_ABBR = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
              "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


class TemporalError(ValueError):
    pass


class RefNotFound(TemporalError):
    def __init__(self, ref: str):
        super().__init__(f"reference entity not in timeline: {ref!r}")
        self.ref = ref


class RelationUnsupported(TemporalError):
    def __init__(self, relation: str):
        super().__init__(f"unsupported temporal relation: {relation!r}")
        self.relation = relation


class Granularity(str, enum.Enum):
    MONTHLY = "monthly"
    YEARLY = "yearly"


@dataclass(frozen=True, order=True)
class TimePoint:
    """A calendar month.  Yearly points are pinned to January."""

    year: int
    month: int = 1
    granularity: Granularity = field(default=Granularity.MONTHLY, compare=False)

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.granularity == Granularity.YEARLY and self.month != 1:
            object.__setattr__(self, "month", 1)

    @classmethod
    def from_index(cls, index: int) -> TimePoint:
        year, month0 = divmod(index, 12)
        return cls(year, month0 + 1)

    @property
    def index(self) -> int:
        """Months since year 0; a dense integer key preserving order."""
        return self.year * 12 + self.month - 1

    def __str__(self) -> str:
        if self.granularity == Granularity.YEARLY:
            return str(self.year)
        return f"{MONTH_ABBR[self.month - 1]}, {self.year}"


@dataclass(frozen=True, order=True)
class TimeInterval:
    start: TimePoint
    end: TimePoint

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"interval ends before it starts: {self.start} > {self.end}")

    def __str__(self) -> str:
        return f"from {self.start} to {self.end}"


def interval_contains(interval: TimeInterval, t: TimePoint) -> bool:
    return interval.start <= t <= interval.end


@dataclass(frozen=True)
class FactEntry:
    interval: TimeInterval
    entity: str

    def __post_init__(self):
        entity = self.entity.strip()
        if not entity:
            raise ValueError("fact entity must be non-empty")
        object.__setattr__(self, "entity", entity)


@dataclass(frozen=True)
class Timeline:
    """Insertion-ordered multimap of interval -> entity.

    The same interval may carry several entities; exact duplicate pairs are
    dropped on construction.
    """

    entries: tuple[FactEntry, ...] = ()

    def __post_init__(self):
        seen = set()
        unique = []
        for entry in self.entries:
            if entry not in seen:
                seen.add(entry)
                unique.append(entry)
        object.__setattr__(self, "entries", tuple(unique))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[TimeInterval, str]]) -> Timeline:
        return cls(tuple(FactEntry(iv, e) for iv, e in pairs))

    def __iter__(self) -> Iterator[FactEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def entities(self) -> list[str]:
        return list(dict.fromkeys(e.entity for e in self.entries))


@dataclass(frozen=True)
class AnswerSet:
    """Deduplicated answers in case-sensitive lexicographic order."""

    entities: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(sorted(set(self.entities))))

    @classmethod
    def of(cls, *entities: str) -> AnswerSet:
        return cls(tuple(entities))

    def __iter__(self) -> Iterator[str]:
        return iter(self.entities)

    def __len__(self) -> int:
        return len(self.entities)

    def __contains__(self, item: object) -> bool:
        return item in self.entities

    def serialize(self) -> str:
        return ", ".join(self.entities)


@dataclass(frozen=True)
class At:
    t: TimePoint


@dataclass(frozen=True)
class Before:
    ref: str


@dataclass(frozen=True)
class After:
    ref: str


TemporalQuery = Union[At, Before, After]


def query_at(timeline: Timeline, t: TimePoint) -> AnswerSet:
    return AnswerSet(tuple(e.entity for e in timeline if interval_contains(e.interval, t)))


def _ref_entries(timeline: Timeline, ref: str) -> list[FactEntry]:
    ref = ref.strip()
    found = [e for e in timeline if e.entity == ref]
    if not found:
        raise RefNotFound(ref)
    return found


def query_before(timeline: Timeline, ref: str) -> AnswerSet:
    ref = ref.strip()
    # earliest tenure of the reference entity
    ref_start = min(e.interval.start for e in _ref_entries(timeline, ref))
    candidates = [e for e in timeline if e.entity != ref and e.interval.end <= ref_start]
    if not candidates:
        return AnswerSet()
    latest = max(e.interval.end for e in candidates)
    return AnswerSet(tuple(e.entity for e in candidates if e.interval.end == latest))


def query_after(timeline: Timeline, ref: str) -> AnswerSet:
    ref = ref.strip()
    # latest tenure of the reference entity
    ref_end = max(e.interval.end for e in _ref_entries(timeline, ref))
    candidates = [e for e in timeline if e.entity != ref and e.interval.start >= ref_end]
    if not candidates:
        return AnswerSet()
    earliest = min(e.interval.start for e in candidates)
    return AnswerSet(tuple(e.entity for e in candidates if e.interval.start == earliest))


def run_query(timeline: Timeline, query: TemporalQuery) -> AnswerSet:
    if isinstance(query, At):
        return query_at(timeline, query.t)
    if isinstance(query, Before):
        return query_before(timeline, query.ref)
    if isinstance(query, After):
        return query_after(timeline, query.ref)
    raise RelationUnsupported(type(query).__name__)


def solve(extraction) -> AnswerSet:
    """Answer an extraction (timeline + relation + reference) exactly."""
    return run_query(extraction.timeline, extraction.query())


def oracle_solve(timeline: Timeline, query: TemporalQuery) -> AnswerSet:
    """Brute-force reference answer by enumerating every month.

    Shares no logic with the ``query_*`` functions; used to cross-check them.
    """
    if isinstance(query, At):
        hits = []
        for entry in timeline:
            months = np.arange(entry.interval.start.index, entry.interval.end.index + 1)
            if (months == query.t.index).any():
                hits.append(entry.entity)
        return AnswerSet(tuple(hits))

    if not isinstance(query, (Before, After)):
        raise RelationUnsupported(type(query).__name__)

    entries = list(timeline)
    ref = query.ref.strip()
    is_ref = np.array([e.entity == ref for e in entries], dtype=bool)
    if not is_ref.any():
        raise RefNotFound(ref)

    lo = min(e.interval.start.index for e in entries)
    hi = max(e.interval.end.index for e in entries)
    # column c is month lo + c - 1; one padding column on each side
    width = hi - lo + 3
    active = np.zeros((len(entries), width), dtype=bool)
    for row, e in enumerate(entries):
        active[row, e.interval.start.index - lo + 1:e.interval.end.index - lo + 2] = True

    ref_cols = np.flatnonzero(active[is_ref].any(axis=0))
    others = active[~is_ref]
    names = [e.entity for e, r in zip(entries, is_ref) if not r]
    prev = np.zeros_like(others)
    prev[:, 1:] = others[:, :-1]
    nxt = np.zeros_like(others)
    nxt[:, :-1] = others[:, 1:]

    if isinstance(query, Before):
        boundary = ref_cols[0]
        ends = others & ~nxt
        cols = np.flatnonzero(ends[:, :boundary + 1].any(axis=0))
        if not cols.size:
            return AnswerSet()
        return AnswerSet(tuple(names[r] for r in np.flatnonzero(ends[:, cols[-1]])))

    boundary = ref_cols[-1]
    starts = others & ~prev
    cols = np.flatnonzero(starts[:, boundary:].any(axis=0))
    if not cols.size:
        return AnswerSet()
    return AnswerSet(tuple(names[r] for r in np.flatnonzero(starts[:, boundary + cols[0]])))

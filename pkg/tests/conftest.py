import random

import pytest

from temporal_qa.core import After, At, Before, FactEntry, TimeInterval, Timeline, TimePoint


def tp(year, month=1):
    return TimePoint(year, month)


def iv(y0, m0, y1, m1):
    return TimeInterval(TimePoint(y0, m0), TimePoint(y1, m1))


@pytest.fixture
def abrahams():
    return Timeline.from_pairs([
        (iv(2004, 1, 2005, 1), "Wivenhoe Town F.C."),
        (iv(2001, 1, 2004, 1), "Heybridge Swifts F.C."),
        (iv(2000, 1, 2001, 1), "Canvey Island F.C."),
        (iv(1996, 1, 1999, 1), "Colchester United F.C."),
        (iv(2001, 1, 2001, 1), "Chesham United F.C."),
    ])


@pytest.fixture
def tol():
    return Timeline.from_pairs([
        (iv(1992, 1, 1992, 1), "Vrije Universiteit Amsterdam"),
        (iv(2006, 1, 2012, 1), "Economic and Social Research Institute"),
        (iv(2000, 1, 2006, 1), "University of Hamburg"),
        (iv(2012, 1, 2022, 12), "University of Sussex"),
    ])


@pytest.fixture
def westfield():
    return Timeline.from_pairs([
        (iv(2018, 6, 2022, 12), "Unibail Rodamco Westfield"),
        (iv(1968, 3, 1971, 1), "The May Department Stores Company"),
        (iv(1971, 1, 2014, 1), "Westfield Group"),
    ])


@pytest.fixture
def roche():
    return Timeline.from_pairs([
        (iv(1990, 1, 1992, 1), "A.J. Auxerre"),
        (iv(1992, 1, 1998, 1), "Paris Saint-Germain F.C."),
        (iv(1998, 1, 2000, 1), "Valencia CF"),
    ])


ENTITY_POOL = [f"E{i}" for i in range(8)]


def random_timeline(rng: random.Random, max_facts=12, lo=1900, hi=2100, pool=ENTITY_POOL):
    """Random timeline with a small entity pool so entities repeat and intervals tie."""
    n = rng.randint(1, max_facts)
    first, last = TimePoint(lo, 1).index, TimePoint(hi, 12).index
    pairs = []
    for _ in range(n):
        a = rng.randint(first, last)
        span = rng.choice([0, rng.randint(0, 24), rng.randint(0, 600)])
        b = min(a + span, last)
        pairs.append((TimeInterval(TimePoint.from_index(a), TimePoint.from_index(b)),
                      rng.choice(pool)))
    return Timeline.from_pairs(pairs)


def random_query(rng: random.Random, tl: Timeline, lo=1900, hi=2100):
    kind = rng.choice(("at", "before", "after"))
    if kind == "at":
        if rng.random() < 0.5:
            e = rng.choice(tl.entries)
            return At(TimePoint.from_index(rng.choice([e.interval.start.index, e.interval.end.index])))
        return At(TimePoint.from_index(rng.randint(TimePoint(lo, 1).index, TimePoint(hi, 12).index)))
    ref = rng.choice(tl.entities())
    return Before(ref) if kind == "before" else After(ref)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        status, title = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")

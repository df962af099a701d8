"""Code-aided temporal question answering.

A language model extracts a timeline of facts plus a query from a question
and its context; a fixed solver answers the query over that timeline.
"""

from temporal_qa.core import (
    After,
    AnswerSet,
    At,
    Before,
    FactEntry,
    Granularity,
    RefNotFound,
    RelationUnsupported,
    TimeInterval,
    Timeline,
    TimePoint,
    interval_contains,
    oracle_solve,
    query_after,
    query_at,
    query_before,
    solve,
)
from temporal_qa.grammar import (
    EntityRef,
    Extraction,
    TimeRef,
    parse_context,
    parse_extraction_block,
    parse_timepoint,
    render_extraction_block,
)
from temporal_qa.metrics import answer_f1, normalize_answer, sem_score

__version__ = "0.1.0"

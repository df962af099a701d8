"""Regenerate the committed case-study dataset and replay store.

The two items are the Richard Tol (L3, single answer) and Paul Abrahams
(L2, multiple answers) case studies.  Baseline completions are the
published InstructGPT outputs; the extraction completions are the blocks a
correct extractor emits for these contexts.
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from temporal_qa.bench import DatasetItem, _request, load_dataset, write_dataset
from temporal_qa.core import AnswerSet
from temporal_qa.gateway import CacheStore
from temporal_qa.prompts import Method, build_prompt

ROOT = Path(__file__).resolve().parents[1] / "src" / "temporal_qa" / "data" / "case_studies"
MODEL = "text-davinci-003"
CREATED_AT = "2023-06-01T00:00:00Z"

TOL = DatasetItem(
    "case-tol",
    "Which employer did Richard Tol work for before Economic and Social Research Institute?",
    "Richard Tol works for Vrije Universiteit Amsterdam from Jan, 1992 to Jan, 1992. "
    "Richard Tol works for Economic and Social Research Institute from Jan, 2006 to Jan, 2012. "
    "Richard Tol works for University of Hamburg from Jan, 2000 to Jan, 2006. "
    "Richard Tol works for University of Sussex from Jan, 2012 to Dec, 2022.",
    AnswerSet.of("University of Hamburg"),
    "L3",
    False,
)

ABRAHAMS = DatasetItem(
    "case-abrahams",
    "Which team did Paul Abrahams play for in Jan, 2001?",
    "Paul Abrahams plays for Wivenhoe Town F.C. from Jan, 2004 to Jan, 2005. "
    "Paul Abrahams plays for Heybridge Swifts F.C. from Jan, 2001 to Jan, 2004. "
    "Paul Abrahams plays for Canvey Island F.C. from Jan, 2000 to Jan, 2001. "
    "Paul Abrahams plays for Colchester United F.C. from Jan, 1996 to Jan, 1999. "
    "Paul Abrahams plays for Chesham United F.C. from Jan, 2001 to Jan, 2001.",
    AnswerSet.of("Canvey Island F.C.", "Chesham United F.C.", "Heybridge Swifts F.C."),
    "L2",
    True,
)

COMPLETIONS = {
    Method.EXTRACT_CODE: {
        "case-tol": (
            '{(datetime(1992, 1, 1), datetime(1992, 1, 1)): "Vrije Universiteit Amsterdam", '
            '(datetime(2006, 1, 1), datetime(2012, 1, 1)): "Economic and Social Research Institute", '
            '(datetime(2000, 1, 1), datetime(2006, 1, 1)): "University of Hamburg", '
            '(datetime(2012, 1, 1), datetime(2022, 12, 1)): "University of Sussex"}\n'
            't_relation = "before"\n'
            'ref_obj = "Economic and Social Research Institute"'
        ),
        "case-abrahams": (
            '{(datetime(2004, 1, 1), datetime(2005, 1, 1)): "Wivenhoe Town F.C.", '
            '(datetime(2001, 1, 1), datetime(2004, 1, 1)): "Heybridge Swifts F.C.", '
            '(datetime(2000, 1, 1), datetime(2001, 1, 1)): "Canvey Island F.C.", '
            '(datetime(1996, 1, 1), datetime(1999, 1, 1)): "Colchester United F.C.", '
            '(datetime(2001, 1, 1), datetime(2001, 1, 1)): "Chesham United F.C."}\n'
            'ref_obj = datetime(2001, 1, 1)'
        ),
    },
    Method.STANDARD: {
        "case-tol": " University of Hamburg",
        "case-abrahams": " Canvey Island F.C., Chesham United F.C., Heybridge Swifts F.C.",
    },
    # answer-first layout, so these replay under the Q+C+A+R ordering
    Method.COT_QCAR: {
        "case-tol": (
            "Answer: Vrije Universiteit Amsterdam. Reasoning: "
            "First, Richard Tol works for Vrije Universiteit Amsterdam from Jan, 1992 to Jan, 1992. "
            "Second, Richard Tol works for University of Hamburg from Jan, 2000 to Jan, 2006. "
            "Third, Richard Tol works for Economic and Social Research Institute from Jan, 2006 to Jan, 2012. "
            "Therefore, the employer before Economic and Social Research Institute is Vrije Universiteit Amsterdam."
        ),
        "case-abrahams": (
            "Answer: Heybridge Swifts F.C. Reasoning: "
            "First, Jan, 2001 is in between Jan, 2001 and Jan, 2004. "
            "Second, Paul Abrahams plays for Heybridge Swifts F.C. from Jan, 2001 to Jan, 2004."
        ),
    },
}


def main() -> None:
    if ROOT.exists():
        shutil.rmtree(ROOT)
    ROOT.mkdir(parents=True)
    write_dataset([TOL, ABRAHAMS], ROOT / "dataset.jsonl")
    items = {it.id: it for it in load_dataset(ROOT / "dataset.jsonl")}
    store = CacheStore(ROOT / "replay", created_at=CREATED_AT)
    for method, by_id in COMPLETIONS.items():
        for item_id, text in by_id.items():
            it = items[item_id]
            prompt = build_prompt(method, it.question, it.context, it.multi)
            store.put(_request(method, prompt, MODEL, 256), text)
    print(json.dumps({"dataset": str(ROOT / "dataset.jsonl"),
                      "entries": len(list((ROOT / "replay").glob("*.json")))}))


if __name__ == "__main__":
    main()

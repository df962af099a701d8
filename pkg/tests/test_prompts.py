import pytest
from hypothesis import given, strategies as st

from temporal_qa.core import AnswerSet
from temporal_qa.prompts import (
    COT_ORDERINGS,
    EmptyAnswer,
    Exemplar,
    Method,
    MissingExemplarField,
    PromptError,
    build_cot_prompt,
    build_extraction_prompt,
    build_no_exec_prompt,
    build_prompt,
    build_standard_prompt,
    load_exemplar,
    parse_model_answer,
    solver_source,
)

Q = "Which team did Paul Abrahams play for in Jan, 2001?"
C = "Paul Abrahams plays for Heybridge Swifts F.C. from Jan, 2001 to Jan, 2004."


class TestExtractionPrompt:
    def test_layout(self):
        ex = load_exemplar("extraction")
        p = build_extraction_prompt(Q, C, ex)
        lines = p.split("\n")
        assert lines[0] == "Extract information from the question and context. Strictly follow the below example."
        assert lines[-1] == "extracted_info = "
        assert p.endswith("\nextracted_info = ")
        assert lines[-3:-1] == [f"Question: {Q}", f"Context: {C}"]
        assert "" in lines
        assert p.count(ex.extraction_block) == 1
        assert p.count(ex.context) == 1

    def test_missing_block(self):
        with pytest.raises(MissingExemplarField):
            build_extraction_prompt(Q, C, load_exemplar("standard"))


class TestStandardPrompt:
    def test_single(self):
        p = build_standard_prompt(Q, C, load_exemplar("standard"), multi=False)
        assert "Only answer the name." in p
        assert "seperate" not in p
        assert p.endswith("\nAnswer:")
        assert p.index("Answer: Paris Saint-Germain F.C.") < p.index(Q)
        assert p.index(f"Context: {C}") < p.index(f"Question: {Q}")

    def test_multi(self):
        p = build_standard_prompt(Q, C, load_exemplar("standard", multi=True), multi=True)
        assert "Only answer the name, and seperate by comma." in p
        assert "Answer: A.J. Auxerre, Paris Saint-Germain F.C." in p


def _label_positions(text, labels=("Question:", "Context:", "Reasoning:", "Answer:")):
    return {lab[0]: text.index(lab) for lab in labels}


class TestCotPrompt:
    @pytest.mark.parametrize("ordering", COT_ORDERINGS)
    def test_ordering_fidelity(self, ordering):
        p = build_cot_prompt(Q, C, load_exemplar("cot"), ordering)
        shot = p.split("\n\n")[0]
        pos = _label_positions(shot)
        assert sorted(pos, key=pos.get) == list(ordering)

    def test_cqra_layout(self):
        p = build_cot_prompt(Q, C, load_exemplar("cot"), "CQRA")
        assert p.split("\n")[:4][0].startswith("Context:")
        assert "Reasoning: First, Jan, 1995 is in between Jan, 1992 and Jan, 1998." in p
        assert p.endswith("\nReasoning:")
        test = p.split("\n\n")[1]
        assert test.index("Context:") < test.index("Question:")

    def test_answer_first_cue(self):
        p = build_cot_prompt(Q, C, load_exemplar("cot"), "QCAR")
        shot = p.split("\n\n")[0]
        assert shot.index("Answer:") < shot.index("Reasoning:")
        assert p.endswith("\nAnswer:")

    def test_multi_instruction(self):
        p = build_cot_prompt(Q, C, load_exemplar("cot", multi=True), "QCRA", multi=True)
        assert "seperate by comma" in p
        assert "France national association football team" in p

    def test_errors(self):
        with pytest.raises(MissingExemplarField):
            build_cot_prompt(Q, C, load_exemplar("standard"), "QCRA")
        with pytest.raises(PromptError):
            build_cot_prompt(Q, C, load_exemplar("cot"), "RAQC")


class TestNoExec:
    BLOCK = 'extracted_info = {(datetime(2001, 1, 1), datetime(2004, 1, 1)): "Heybridge Swifts F.C."}\nref_obj = datetime(2001, 1, 1)'

    def test_layout(self):
        src = solver_source()
        p = build_no_exec_prompt(Q, C, load_exemplar("extraction"), self.BLOCK, src)
        assert self.BLOCK in p
        test = p[p.rindex("# Question:"):]
        assert test.index(self.BLOCK) < test.index("def solution():") < test.index("print(solution())")
        assert test.index("from datetime import datetime") < test.index(self.BLOCK)
        assert p.split("\n")[-1] == "Output:"

    def test_solver_source_matches_solver(self, westfield, abrahams):
        # the shipped program text agrees with the in-process solver
        from datetime import datetime

        from temporal_qa.core import query_at, query_before
        def run(tl, rel, ref):
            ns = {"extracted_info": {(datetime(e.interval.start.year, e.interval.start.month, 1),
                                      datetime(e.interval.end.year, e.interval.end.month, 1)): e.entity
                                     for e in tl},
                  "ref_obj": ref}
            if rel:
                ns["t_relation"] = rel
            exec(solver_source() + "\nresult = solution()", ns)
            return ns["result"]
        assert run(westfield, "before", "Westfield Group") == query_before(westfield, "Westfield Group").serialize()
        assert run(westfield, "after", "Westfield Group") == "Unibail Rodamco Westfield"
        assert run(abrahams, None, datetime(2001, 1, 1)) == query_at(abrahams, abrahams.entries[1].interval.start).serialize()


class TestParseAnswer:
    def test_cot_multi(self):
        a = parse_model_answer("Answer: Paris Saint-Germain F.C., France national association football team.",
                               Method.COT_QCRA, multi=True)
        assert a == AnswerSet.of("Paris Saint-Germain F.C.", "France national association football team")

    def test_standard(self):
        assert parse_model_answer("University of Hamburg", Method.STANDARD, False) == AnswerSet.of("University of Hamburg")

    def test_cot_answer_first(self):
        text = "Answer: Vrije Universiteit Amsterdam. Reasoning: First, Richard Tol works for ..."
        assert parse_model_answer(text, Method.COT_QCAR, False) == AnswerSet.of("Vrije Universiteit Amsterdam")

    def test_reason_label(self):
        text = "Answer: Heybridge Swifts F.C. Reason: \nJan, 2001 is in between Jan, 2001 to Jan, 2004."
        assert parse_model_answer(text, Method.COT_CQAR, True) == AnswerSet.of("Heybridge Swifts F.C.")

    def test_cot_reason_first_uses_last_answer(self):
        text = " First, Jan, 1995 is in between. Answer: wrong. More. Answer: Valencia CF."
        assert parse_model_answer(text, Method.COT_CQRA, False) == AnswerSet.of("Valencia CF")

    def test_answer_first_without_label(self):
        assert parse_model_answer(" Valencia CF. Reasoning: because", Method.COT_QCAR, False) == AnswerSet.of("Valencia CF")

    def test_single_mode_keeps_commas(self):
        a = parse_model_answer("Smith, Jones & Co", Method.STANDARD, multi=False)
        assert a == AnswerSet.of("Smith, Jones & Co")

    def test_empty(self):
        with pytest.raises(EmptyAnswer):
            parse_model_answer("Answer: .", Method.COT_QCRA, True)
        with pytest.raises(EmptyAnswer):
            parse_model_answer("  ", Method.STANDARD, False)


names = st.text(st.sampled_from(list("abcXYZ .-&")), min_size=1, max_size=10).filter(lambda s: any(ch.isalpha() for ch in s))


@given(st.lists(names, min_size=1, max_size=4), st.booleans())
def test_parse_idempotent(parts, multi):
    first = parse_model_answer(", ".join(parts), Method.STANDARD, multi)
    assert parse_model_answer(first.serialize(), Method.STANDARD, multi) == first


@pytest.mark.parametrize("method", list(Method))
def test_template_injectivity(method):
    prompts = {build_prompt(method, q, c, multi)
               for q in ("q1?", "q2?") for c in ("c1.", "c2.") for multi in (False,)}
    assert len(prompts) == 4
    if method is Method.EXTRACT_CODE_NOEXEC:
        ex = load_exemplar("extraction")
        noexec = {build_no_exec_prompt(q, c, ex, "extracted_info = {}\nref_obj = datetime(2000, 1, 1)", solver_source())
                  for q in ("q1?", "q2?") for c in ("c1.", "c2.")}
        assert len(noexec) == 4


def test_method_labels():
    assert Method.EXTRACT_CODE.label == "Extraction + Code"
    assert Method.COT_QCRA.label == "CoT (Q+C+R+A)"
    assert Method("cot-cqar").ordering == "CQAR"
    assert Method.STANDARD.ordering is None

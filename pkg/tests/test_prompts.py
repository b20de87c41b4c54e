from pathlib import Path

import pytest

from rps.errors import MissingBinding
from rps.prompts import TEMPLATE_NAMES, get_template, render, render_prompt

GOLDEN_DIR = Path(__file__).parent / "goldens"

DOC = ("Items can be returned within 90 days of purchase with a receipt for a "
       "full refund. Opened software and clearance items are final sale and "
       "cannot be returned.")
Q = "Can I return an item I bought three weeks ago?"
GT = "Items can be returned within 90 days with a receipt."
PRED = "You have 90 days to return items with a receipt."
ANSWER = "Items can be returned within 90 days with a receipt."
AREAS = "Whether clearance items are excluded; whether the window is 90 days."

GOLDEN_BINDINGS = {
    "AnswerGen": ("answer_gen", {"retrieved_document": DOC, "question": Q}),
    "QaGen": ("qa_gen", {"question_index": "2", "document": DOC}),
    "Judge": ("judge", {"question": "How long do I have to return an item?",
                        "ground_truth": GT, "prediction": PRED}),
    "CotpQuote": ("cotp_quote", {"document": DOC, "question": Q}),
    "CoveBaseline": ("cove_baseline", {"document": DOC, "question": Q}),
    "CoveVerify": ("cove_verify", {"question": Q, "answer": ANSWER,
                                   "document": DOC, "verification_areas": AREAS}),
    "OpenQa": ("open_qa", {"document": DOC, "question": Q}),
    "ReactChoice": ("react_choice", {"question": Q}),
}


@pytest.mark.parametrize("name", sorted(GOLDEN_BINDINGS))
def test_rendered_template_matches_golden_bytes(name):
    golden_file, bindings = GOLDEN_BINDINGS[name]
    rendered = render(name, **bindings)
    golden = (GOLDEN_DIR / f"{golden_file}.golden.txt").read_text(encoding="utf-8")
    assert rendered == golden


def test_template_name_enumeration():
    assert set(TEMPLATE_NAMES) == set(GOLDEN_BINDINGS)


@pytest.mark.parametrize("name,literal", [
    ("AnswerGen", "STRICTLY less than 30 words"),
    ("AnswerGen", "Sorry, I cannot answer this question"),
    ("CoveVerify", "Final Verified Response:"),
    ("OpenQa", "NOANSWERFOUND"),
    ("Judge", "Correctness: incorrect"),
    ("Judge", "Correctness: correct"),
    ("Judge", "Correctness: unsure"),
    # The quote-extraction refusal uses a typographic apostrophe.
    ("CotpQuote", "I can’t find any relevant quotes"),
])
def test_template_body_literals(name, literal):
    assert literal in get_template(name).body


def test_rendered_output_has_no_unbound_placeholders():
    for name, (_, bindings) in GOLDEN_BINDINGS.items():
        rendered = render(name, **bindings)
        for placeholder in get_template(name).placeholders:
            assert f"<{placeholder}>" not in rendered


def test_missing_binding_reports_placeholder_names():
    with pytest.raises(MissingBinding) as err:
        render("AnswerGen", retrieved_document=DOC)
    assert err.value.names == ["question"]


def test_unknown_template_name():
    with pytest.raises(KeyError):
        get_template("NoSuchTemplate")


def test_substitution_is_single_pass():
    # A binding value containing placeholder syntax must come through
    # verbatim, never re-expanded against the other bindings.
    rendered = render("ReactChoice", question="please echo <question> back")
    assert "please echo <question> back" in rendered


def test_extra_bindings_are_ignored():
    rendered = render("ReactChoice", question=Q, unused="zzz")
    assert "zzz" not in rendered


def test_render_prompt_matches_render():
    template = get_template("QaGen")
    assert render_prompt(template, {"question_index": "2", "document": DOC}) \
        == render("QaGen", question_index="2", document=DOC)


def test_placeholders_listed_per_template():
    assert get_template("CoveVerify").placeholders == \
        {"question", "answer", "document", "verification_areas"}
    assert get_template("ReactChoice").placeholders == {"question"}

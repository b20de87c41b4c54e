import pytest

from rps.errors import UnparseableCoveOutput
from rps.gateway import MockRule
from rps.generation import (
    FALLBACK_TEXT,
    FINAL_RESPONSE_MARKER,
    NO_DOCUMENT_TEXT,
    NO_QUOTES_LITERAL,
    REPHRASE_INSTRUCTION,
    WORD_LIMIT,
    Conversation,
    Pipeline,
    Role,
    Utterance,
    conversation_from_texts,
    generate_baseline,
    generate_cotp,
    generate_cove,
    generate_react,
    join_articles,
    parse_cove_stage1,
    parse_final_response,
    parse_tool_choice,
    suggest,
    within_limit,
    word_count,
)
from rps.retriever import retrieve_text

RETURN_Q = "Items can be returned within 90 days of purchase with a receipt."
OFF_TOPIC_Q = "zebra xylophone quantum cascade"

SHORT_ANSWER = "You can return it within 90 days with your receipt."
LONG_ANSWER = " ".join(f"word{i}" for i in range(40))

CHOICE_MATCH = "deciding whether a knowledge-base lookup is needed"
ANSWER_MATCH = "reading comprehension and answer generation expert"
QUOTE_MATCH = "quote extraction expert"
COVE_STAGE1_MATCH = "Potential Areas for Verification"
COVE_STAGE2_MATCH = "Final Verified Response"

COVE_STAGE1_REPLY = (
    'Quotes: "Items can be returned within 90 days of purchase with a receipt"\n'
    "Answer: Returns are accepted within 90 days with a receipt.\n"
    "Potential Areas for Verification:\n"
    "1. Is the window really 90 days?\n"
    "2. Is a receipt required?"
)
COVE_STAGE2_REPLY = (
    "1. Yes, the document says 90 days.\n"
    "2. Yes, a receipt is required.\n"
    "Final Verified Response: Returns are accepted within 90 days with a receipt."
)


def _conv(text=RETURN_Q):
    return Conversation((Utterance(Role.CUSTOMER, text),))


def _decision(index, provider, text=RETURN_Q, threshold=0.7):
    return retrieve_text(index, provider, text, threshold=threshold)


# ------------------------------------------------------------- conversations


def test_utterance_rejects_blank_text():
    with pytest.raises(ValueError):
        Utterance(Role.CUSTOMER, "   ")


def test_utterance_coerces_role_strings():
    assert Utterance("Agent", "hello").role is Role.AGENT


def test_conversation_must_be_non_empty():
    with pytest.raises(ValueError):
        Conversation(())


def test_final_query_is_last_utterance():
    conv = conversation_from_texts(
        ("Customer", "Hi there"),
        ("Agent", "Hello! How can I help?"),
        ("Customer", "Where is my order?"),
    )
    assert conv.final_query == "Where is my order?"
    assert conv.final_role is Role.CUSTOMER


def test_question_binding_single_turn_has_no_context_block():
    assert _conv("Just one question").question_binding() == "Just one question"


def test_question_binding_prepends_labeled_context():
    conv = conversation_from_texts(
        ("Customer", "Hi"),
        ("Agent", "Hello!"),
        ("Customer", "Can I return my blender?"),
    )
    assert conv.question_binding() == (
        "Context:\nCustomer: Hi\nAgent: Hello!\n\nCan I return my blender?"
    )


def test_question_binding_trims_to_max_context_turns():
    turns = [("Customer", f"turn {i}") for i in range(10)]
    conv = conversation_from_texts(*turns, max_context_turns=2)
    binding = conv.question_binding()
    assert binding == "Context:\nCustomer: turn 7\nCustomer: turn 8\n\nturn 9"


# ------------------------------------------------------------- word limit


def test_word_count_splits_on_whitespace():
    assert word_count("one  two\tthree\nfour") == 4


def test_within_limit_is_strict():
    assert within_limit(" ".join(["w"] * (WORD_LIMIT - 1)))
    assert not within_limit(" ".join(["w"] * WORD_LIMIT))


# ------------------------------------------------------------- join_articles


def test_join_single_article_is_verbatim():
    assert join_articles(["body text"]) == "body text"


def test_join_multiple_articles_numbers_them():
    joined = join_articles(["first", "second"])
    assert joined == "Article 1: first\n\nArticle 2: second"


def test_join_rejects_empty_list():
    with pytest.raises(ValueError):
        join_articles([])


# ------------------------------------------------------------- baseline


def test_baseline_grounded_single_call(provider, exact_index, articles,
                                       mock_gateway, answer_rule):
    gw = mock_gateway([answer_rule(SHORT_ANSWER, latency=0.5)])
    suggestion = generate_baseline(
        _conv(), _decision(exact_index, provider), articles, gw)
    assert suggestion.text == SHORT_ANSWER
    assert suggestion.llm_calls == 1
    assert suggestion.retrieval_fired
    assert not suggestion.is_fallback
    assert suggestion.grounding_doc_ids == ("kb-returns",)
    assert suggestion.scores[0] >= 0.7
    assert suggestion.within_limit
    assert suggestion.llm_seconds == pytest.approx(0.5)
    assert len(gw.ledger()) == 1
    assert RETURN_Q in gw.ledger()[0].prompt  # grounding document is in the prompt


def test_baseline_retries_once_when_over_limit(provider, exact_index, articles,
                                               mock_gateway, answer_rule):
    gw = mock_gateway([
        MockRule(response=SHORT_ANSWER,
                 match="The generated response was not less than 30 words"),
        answer_rule(LONG_ANSWER),
    ])
    suggestion = generate_baseline(
        _conv(), _decision(exact_index, provider), articles, gw)
    assert suggestion.text == SHORT_ANSWER
    assert suggestion.llm_calls == 2
    assert suggestion.within_limit
    ledger = gw.ledger()
    assert len(ledger) == 2
    assert ledger[1].prompt == f"{ledger[0].prompt}\n\n{REPHRASE_INSTRUCTION}"


def test_baseline_keeps_second_answer_even_if_still_long(
        provider, exact_index, articles, mock_gateway, answer_rule):
    gw = mock_gateway([answer_rule(LONG_ANSWER)])  # retry also comes back long
    suggestion = generate_baseline(
        _conv(), _decision(exact_index, provider), articles, gw)
    assert suggestion.llm_calls == 2
    assert suggestion.text == LONG_ANSWER
    assert not suggestion.within_limit


def test_baseline_fallback_makes_no_calls(provider, exact_index, articles,
                                          mock_gateway):
    gw = mock_gateway(default="should never be called")
    suggestion = generate_baseline(
        _conv(OFF_TOPIC_Q), _decision(exact_index, provider, OFF_TOPIC_Q),
        articles, gw)
    assert suggestion.is_fallback
    assert suggestion.text == FALLBACK_TEXT
    assert suggestion.llm_calls == 0
    assert not suggestion.retrieval_fired
    assert suggestion.grounding_doc_ids == ()
    assert gw.ledger() == []


# ------------------------------------------------------------- ReAct


def test_parse_tool_choice():
    assert parse_tool_choice("retrieve") == "retrieve"
    assert parse_tool_choice('  "Respond."  ') == "respond"
    assert parse_tool_choice("`retrieve`") == "retrieve"
    assert parse_tool_choice("let me think about it") is None
    assert parse_tool_choice("") is None


def test_react_respond_path_skips_retrieval(provider, exact_index, articles,
                                            mock_gateway, answer_rule):
    gw = mock_gateway([
        MockRule(response="respond", match=CHOICE_MATCH),
        answer_rule("Hello! Happy to help."),
    ])
    suggestion = generate_react(_conv("Hi, how are you today?"), exact_index,
                                provider, articles, gw)
    assert suggestion.text == "Hello! Happy to help."
    assert suggestion.llm_calls == 2
    assert not suggestion.retrieval_fired
    assert suggestion.grounding_doc_ids == ()
    ledger = gw.ledger()
    assert len(ledger) == 2
    assert NO_DOCUMENT_TEXT in ledger[1].prompt


def test_react_retrieve_path_grounds_the_answer(provider, exact_index, articles,
                                                mock_gateway, answer_rule):
    gw = mock_gateway([
        MockRule(response="retrieve", match=CHOICE_MATCH),
        answer_rule(SHORT_ANSWER),
    ])
    suggestion = generate_react(_conv(), exact_index, provider, articles, gw)
    assert suggestion.text == SHORT_ANSWER
    assert suggestion.llm_calls == 2
    assert suggestion.retrieval_fired
    assert suggestion.grounding_doc_ids == ("kb-returns",)


def test_react_retrieve_gate_miss_falls_back_after_one_call(
        provider, exact_index, articles, mock_gateway):
    gw = mock_gateway([MockRule(response="retrieve", match=CHOICE_MATCH)],
                      default="never used")
    suggestion = generate_react(_conv(OFF_TOPIC_Q), exact_index, provider,
                                articles, gw)
    assert suggestion.is_fallback
    assert suggestion.llm_calls == 1  # the choice call was already spent
    assert len(gw.ledger()) == 1


def test_react_unparseable_choice_retrieves_conservatively(
        provider, exact_index, articles, mock_gateway, answer_rule):
    gw = mock_gateway([
        MockRule(response="hmm, that is a tough one", match=CHOICE_MATCH),
        answer_rule(SHORT_ANSWER),
    ])
    suggestion = generate_react(_conv(), exact_index, provider, articles, gw)
    assert suggestion.retrieval_fired
    assert suggestion.text == SHORT_ANSWER
    assert suggestion.llm_calls == 2


# ------------------------------------------------------------- CoTP


def test_cotp_answers_from_quotes(provider, exact_index, articles,
                                  mock_gateway, answer_rule):
    quote = '"Items can be returned within 90 days of purchase with a receipt"'
    gw = mock_gateway([
        MockRule(response=quote, match=QUOTE_MATCH, latency=0.2),
        answer_rule(SHORT_ANSWER, latency=0.3),
    ])
    suggestion = generate_cotp(
        _conv(), _decision(exact_index, provider), articles, gw)
    assert suggestion.text == SHORT_ANSWER
    assert suggestion.llm_calls == 2
    assert suggestion.llm_seconds == pytest.approx(0.5)
    ledger = gw.ledger()
    assert quote in ledger[1].prompt  # the answer call sees quotes, not the article


def test_cotp_no_quotes_literal_falls_back(provider, exact_index, articles,
                                           mock_gateway):
    gw = mock_gateway([MockRule(response=NO_QUOTES_LITERAL, match=QUOTE_MATCH)])
    suggestion = generate_cotp(
        _conv(), _decision(exact_index, provider), articles, gw)
    assert suggestion.is_fallback
    assert suggestion.llm_calls == 1
    assert len(gw.ledger()) == 1


def test_cotp_straight_apostrophe_is_not_the_refusal(provider, exact_index,
                                                     articles, mock_gateway,
                                                     answer_rule):
    ascii_variant = NO_QUOTES_LITERAL.replace("’", "'")
    gw = mock_gateway([
        MockRule(response=ascii_variant, match=QUOTE_MATCH),
        answer_rule(SHORT_ANSWER),
    ])
    suggestion = generate_cotp(
        _conv(), _decision(exact_index, provider), articles, gw)
    assert not suggestion.is_fallback
    assert suggestion.llm_calls == 2


def test_cotp_gate_miss_is_free(provider, exact_index, articles, mock_gateway):
    gw = mock_gateway(default="never used")
    suggestion = generate_cotp(
        _conv(OFF_TOPIC_Q), _decision(exact_index, provider, OFF_TOPIC_Q),
        articles, gw)
    assert suggestion.is_fallback
    assert suggestion.llm_calls == 0
    assert gw.ledger() == []


# ------------------------------------------------------------- CoVe


def test_parse_cove_stage1_sections():
    quotes, answer, areas = parse_cove_stage1(COVE_STAGE1_REPLY)
    assert quotes.startswith('"Items can be returned')
    assert answer == "Returns are accepted within 90 days with a receipt."
    assert areas.startswith("1. Is the window really 90 days?")


def test_parse_cove_stage1_missing_marker_keeps_raw_text():
    bad = "Quotes: something\nAnswer: something else"
    with pytest.raises(UnparseableCoveOutput) as err:
        parse_cove_stage1(bad)
    assert err.value.raw_text == bad


def test_parse_cove_stage1_rejects_out_of_order_markers():
    shuffled = ("Answer: first\nQuotes: second\n"
                "Potential Areas for Verification: third")
    with pytest.raises(UnparseableCoveOutput):
        parse_cove_stage1(shuffled)


def test_parse_final_response_uses_last_marker():
    text = (f"{FINAL_RESPONSE_MARKER} draft one\n"
            f"more thinking\n{FINAL_RESPONSE_MARKER} the real answer")
    assert parse_final_response(text) == "the real answer"


def test_parse_final_response_missing_marker():
    with pytest.raises(UnparseableCoveOutput) as err:
        parse_final_response("no marker here at all")
    assert err.value.raw_text == "no marker here at all"


def test_cove_runs_two_stages(provider, exact_index, articles, mock_gateway):
    gw = mock_gateway([
        MockRule(response=COVE_STAGE2_REPLY, match=COVE_STAGE2_MATCH),
        MockRule(response=COVE_STAGE1_REPLY, match=COVE_STAGE1_MATCH),
    ])
    suggestion = generate_cove(
        _conv(), _decision(exact_index, provider), articles, gw)
    assert suggestion.text == "Returns are accepted within 90 days with a receipt."
    assert suggestion.llm_calls == 2
    ledger = gw.ledger()
    assert len(ledger) == 2
    # Stage 2 receives the stage-1 answer and verification areas.
    assert "Returns are accepted within 90 days with a receipt." in ledger[1].prompt
    assert "Is the window really 90 days?" in ledger[1].prompt


def test_cove_gate_miss_is_free(provider, exact_index, articles, mock_gateway):
    gw = mock_gateway(default="never used")
    suggestion = generate_cove(
        _conv(OFF_TOPIC_Q), _decision(exact_index, provider, OFF_TOPIC_Q),
        articles, gw)
    assert suggestion.is_fallback
    assert suggestion.llm_calls == 0


# ------------------------------------------------------------- dispatcher


@pytest.mark.parametrize("pipeline,expected_calls", [
    ("baseline", 1), ("react", 2), ("cotp", 2), ("cove", 2),
])
def test_suggest_dispatch_and_call_budget(pipeline, expected_calls, provider,
                                          exact_index, articles, mock_gateway,
                                          answer_rule):
    gw = mock_gateway([
        MockRule(response="retrieve", match=CHOICE_MATCH),
        MockRule(response=COVE_STAGE2_REPLY, match=COVE_STAGE2_MATCH),
        MockRule(response=COVE_STAGE1_REPLY, match=COVE_STAGE1_MATCH),
        MockRule(response='"a quote"', match=QUOTE_MATCH),
        answer_rule(SHORT_ANSWER),
    ])
    suggestion = suggest(_conv(), pipeline, exact_index, provider, articles, gw)
    assert suggestion.pipeline is Pipeline(pipeline)
    assert suggestion.llm_calls == expected_calls
    assert suggestion.llm_calls == len(gw.ledger())
    assert suggestion.retrieval_fired
    assert not suggestion.is_fallback


def test_suggest_baseline_never_costs_more_than_the_two_stage_pipelines(
        provider, exact_index, articles, mock_gateway, answer_rule):
    def run(pipeline):
        gw = mock_gateway([
            MockRule(response="retrieve", match=CHOICE_MATCH),
            MockRule(response=COVE_STAGE2_REPLY, match=COVE_STAGE2_MATCH),
            MockRule(response=COVE_STAGE1_REPLY, match=COVE_STAGE1_MATCH),
            MockRule(response='"a quote"', match=QUOTE_MATCH),
            answer_rule(SHORT_ANSWER),
        ])
        return suggest(_conv(), pipeline, exact_index, provider, articles, gw)

    baseline_calls = run("baseline").llm_calls
    for other in ("react", "cotp", "cove"):
        assert baseline_calls <= run(other).llm_calls


def test_suggest_rejects_unknown_pipeline(provider, exact_index, articles,
                                          mock_gateway):
    with pytest.raises(ValueError):
        suggest(_conv(), "telepathy", exact_index, provider, articles,
                mock_gateway())

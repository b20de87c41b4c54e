"""Response pipelines: baseline grounded generation, ReAct tool gating,
quote-extraction (CoTP), and chain-of-verification (CoVe).

Every pipeline produces a :class:`Suggestion` and accounts for its LLM
calls so evaluation can compare cost profiles from the gateway ledger
alone. The word limit is bookkeeping, not truncation: a response is
``within_limit`` iff its whitespace word count is strictly under 30, and
only the baseline pipeline retries (once) to get back under it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .dataset import KbArticle
from .embedding import EmbeddingProvider
from .errors import UnparseableCoveOutput
from .gateway import LlmGateway, LlmRequest
from .index import CorpusIndex
from .prompts import render
from .retriever import DEFAULT_K, DEFAULT_THRESHOLD, RetrievalDecision, retrieve_text

WORD_LIMIT = 30

FALLBACK_TEXT = ("I can help with questions about our products, orders, and "
                 "policies — could you share more detail about your request?")

# Literal reply (curly apostrophe) the quote-extraction prompt demands when
# the document holds nothing relevant.
NO_QUOTES_LITERAL = "I can’t find any relevant quotes"

FINAL_RESPONSE_MARKER = "Final Verified Response:"

NO_DOCUMENT_TEXT = "No document was retrieved for this question."

REPHRASE_INSTRUCTION = ("The generated response was not less than 30 words. "
                        "Please rephrase the response in STRICTLY less than 30 words.")


class Pipeline(str, Enum):
    BASELINE = "baseline"
    REACT = "react"
    COTP = "cotp"
    COVE = "cove"


class Role(str, Enum):
    CUSTOMER = "Customer"
    AGENT = "Agent"


@dataclass(frozen=True)
class Utterance:
    role: Role
    text: str
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if not self.text.strip():
            raise ValueError("utterance text must be non-empty")


@dataclass(frozen=True)
class Conversation:
    """Ordered transcript whose final utterance is the query to answer."""

    utterances: tuple[Utterance, ...]
    max_context_turns: int = 6

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        if not self.utterances:
            raise ValueError("conversation must contain at least one utterance")
        if self.max_context_turns < 1:
            raise ValueError("max_context_turns must be >= 1")

    @property
    def final_query(self) -> str:
        return self.utterances[-1].text

    @property
    def final_role(self) -> Role:
        return self.utterances[-1].role

    def question_binding(self) -> str:
        """Final query with up to max_context_turns prior turns prepended."""
        prior = self.utterances[:-1][-self.max_context_turns:]
        if not prior:
            return self.final_query
        context = "\n".join(f"{u.role.value}: {u.text}" for u in prior)
        return f"Context:\n{context}\n\n{self.final_query}"


def conversation_from_texts(*turns: tuple[str, str],
                            max_context_turns: int = 6) -> Conversation:
    """Build a conversation from (role, text) tuples; test/demo convenience."""
    return Conversation(tuple(Utterance(Role(r), t) for r, t in turns),
                        max_context_turns=max_context_turns)


@dataclass(frozen=True)
class Suggestion:
    text: str
    grounding_doc_ids: tuple[str, ...]
    scores: tuple[float, ...]
    retrieval_fired: bool
    pipeline: Pipeline
    llm_calls: int
    word_count: int
    within_limit: bool
    is_fallback: bool
    llm_seconds: float


def word_count(text: str) -> int:
    return len(text.split())


def within_limit(text: str) -> bool:
    return word_count(text) < WORD_LIMIT


def join_articles(bodies: list[str]) -> str:
    """Collapse retrieved article bodies into the one document slot.

    A single article passes through verbatim; several are separated by
    blank lines under "Article <i>:" headers so the model can cite them
    apart.
    """
    if not bodies:
        raise ValueError("no article bodies to join")
    if len(bodies) == 1:
        return bodies[0]
    return "\n\n".join(f"Article {i}: {body}"
                       for i, body in enumerate(bodies, start=1))


def _grounding(decision: RetrievalDecision,
               articles: Mapping[str, KbArticle]) -> tuple[str, tuple[str, ...], tuple[float, ...]]:
    bodies = []
    for hit in decision.hits:
        if hit.doc_id not in articles:
            raise KeyError(f"retrieved doc id {hit.doc_id!r} not in the article map")
        bodies.append(articles[hit.doc_id].body)
    ids = tuple(hit.doc_id for hit in decision.hits)
    scores = tuple(hit.score for hit in decision.hits)
    return join_articles(bodies), ids, scores


def _suggestion(text: str, pipeline: Pipeline, llm_calls: int, llm_seconds: float,
                doc_ids: tuple[str, ...] = (), scores: tuple[float, ...] = (),
                retrieval_fired: bool = False,
                fallback_text: str = FALLBACK_TEXT) -> Suggestion:
    return Suggestion(
        text=text,
        grounding_doc_ids=doc_ids,
        scores=scores,
        retrieval_fired=retrieval_fired,
        pipeline=pipeline,
        llm_calls=llm_calls,
        word_count=word_count(text),
        within_limit=within_limit(text),
        is_fallback=(text == fallback_text),
        llm_seconds=llm_seconds,
    )


def _fallback(pipeline: Pipeline, llm_calls: int = 0, llm_seconds: float = 0.0,
              fallback_text: str = FALLBACK_TEXT) -> Suggestion:
    return _suggestion(fallback_text, pipeline, llm_calls, llm_seconds,
                       fallback_text=fallback_text)


# -- baseline ----------------------------------------------------------------

def generate_baseline(conv: Conversation, decision: RetrievalDecision,
                      articles: Mapping[str, KbArticle], gateway: LlmGateway,
                      fallback_text: str = FALLBACK_TEXT,
                      pipeline: Pipeline = Pipeline.BASELINE) -> Suggestion:
    """Grounded answer in one call; no retrieval means no call at all.

    An over-limit answer earns exactly one retry with the rephrase
    instruction appended; the second answer stands either way.
    """
    if not decision.fired:
        return _fallback(pipeline, fallback_text=fallback_text)
    document, doc_ids, scores = _grounding(decision, articles)
    prompt = render("AnswerGen", retrieved_document=document,
                    question=conv.question_binding())
    reply = gateway.generate(LlmRequest(prompt))
    text = reply.text.strip()
    calls, seconds = 1, reply.latency
    if not within_limit(text):
        retry = gateway.generate(LlmRequest(f"{prompt}\n\n{REPHRASE_INSTRUCTION}"))
        text = retry.text.strip()
        calls, seconds = calls + 1, seconds + retry.latency
    return _suggestion(text, pipeline, calls, seconds, doc_ids, scores,
                       retrieval_fired=True, fallback_text=fallback_text)


# -- ReAct -------------------------------------------------------------------

def parse_tool_choice(text: str) -> str | None:
    """Map the tool-choice reply to "retrieve"/"respond"; None if neither."""
    token = text.strip().strip('."\'`').lower()
    if token in ("retrieve", "respond"):
        return token
    return None


def generate_react(conv: Conversation, index: CorpusIndex,
                   embed_provider: EmbeddingProvider,
                   articles: Mapping[str, KbArticle], gateway: LlmGateway,
                   k: int = DEFAULT_K, threshold: float = DEFAULT_THRESHOLD,
                   fallback_text: str = FALLBACK_TEXT) -> Suggestion:
    """Spend one reasoning call deciding whether retrieval is needed.

    An unparseable choice is treated as "retrieve" — wrongly searching
    costs latency, wrongly skipping grounding costs accuracy.
    """
    choice_reply = gateway.generate(LlmRequest(
        render("ReactChoice", question=conv.question_binding())
    ))
    choice = parse_tool_choice(choice_reply.text) or "retrieve"
    calls, seconds = 1, choice_reply.latency
    if choice == "respond":
        prompt = render("AnswerGen", retrieved_document=NO_DOCUMENT_TEXT,
                        question=conv.question_binding())
        reply = gateway.generate(LlmRequest(prompt))
        return _suggestion(reply.text.strip(), Pipeline.REACT, calls + 1,
                           seconds + reply.latency, fallback_text=fallback_text)
    decision = retrieve_text(index, embed_provider, conv.final_query,
                             k=k, threshold=threshold)
    if not decision.fired:
        return _fallback(Pipeline.REACT, calls, seconds, fallback_text)
    document, doc_ids, scores = _grounding(decision, articles)
    prompt = render("AnswerGen", retrieved_document=document,
                    question=conv.question_binding())
    reply = gateway.generate(LlmRequest(prompt))
    return _suggestion(reply.text.strip(), Pipeline.REACT, calls + 1,
                       seconds + reply.latency, doc_ids, scores,
                       retrieval_fired=True, fallback_text=fallback_text)


# -- CoTP ----------------------------------------------------------------------

def generate_cotp(conv: Conversation, decision: RetrievalDecision,
                  articles: Mapping[str, KbArticle], gateway: LlmGateway,
                  fallback_text: str = FALLBACK_TEXT) -> Suggestion:
    """Extract verbatim quotes first, then answer from the quotes alone."""
    if not decision.fired:
        return _fallback(Pipeline.COTP, fallback_text=fallback_text)
    document, doc_ids, scores = _grounding(decision, articles)
    question = conv.question_binding()
    quotes_reply = gateway.generate(LlmRequest(
        render("CotpQuote", document=document, question=question)
    ))
    quotes = quotes_reply.text.strip()
    if quotes == NO_QUOTES_LITERAL:
        return _fallback(Pipeline.COTP, 1, quotes_reply.latency, fallback_text)
    answer_reply = gateway.generate(LlmRequest(
        render("AnswerGen", retrieved_document=quotes, question=question)
    ))
    return _suggestion(answer_reply.text.strip(), Pipeline.COTP, 2,
                       quotes_reply.latency + answer_reply.latency,
                       doc_ids, scores, retrieval_fired=True,
                       fallback_text=fallback_text)


# -- CoVe ----------------------------------------------------------------------

_COVE_SECTIONS = ("Quotes:", "Answer:", "Potential Areas for Verification:")


def parse_cove_stage1(text: str) -> tuple[str, str, str]:
    """Split the plan-verification reply into (quotes, answer, areas).

    The three section markers must appear in order; anything else is an
    UnparseableCoveOutput carrying the raw reply.
    """
    positions = []
    cursor = 0
    for marker in _COVE_SECTIONS:
        found = text.find(marker, cursor)
        if found < 0:
            raise UnparseableCoveOutput(
                f"stage-1 reply is missing the {marker!r} section", text)
        positions.append(found)
        cursor = found + len(marker)
    quotes = text[positions[0] + len(_COVE_SECTIONS[0]):positions[1]].strip()
    answer = text[positions[1] + len(_COVE_SECTIONS[1]):positions[2]].strip()
    areas = text[positions[2] + len(_COVE_SECTIONS[2]):].strip()
    return quotes, answer, areas


def parse_final_response(text: str) -> str:
    """Text after the LAST "Final Verified Response:" marker."""
    found = text.rfind(FINAL_RESPONSE_MARKER)
    if found < 0:
        raise UnparseableCoveOutput(
            f"verification reply is missing the {FINAL_RESPONSE_MARKER!r} marker", text)
    return text[found + len(FINAL_RESPONSE_MARKER):].strip()


def generate_cove(conv: Conversation, decision: RetrievalDecision,
                  articles: Mapping[str, KbArticle], gateway: LlmGateway,
                  fallback_text: str = FALLBACK_TEXT) -> Suggestion:
    """Draft with a verification plan, then execute the plan and revise."""
    if not decision.fired:
        return _fallback(Pipeline.COVE, fallback_text=fallback_text)
    document, doc_ids, scores = _grounding(decision, articles)
    question = conv.question_binding()
    stage1 = gateway.generate(LlmRequest(
        render("CoveBaseline", document=document, question=question)
    ))
    _, answer, areas = parse_cove_stage1(stage1.text)
    stage2 = gateway.generate(LlmRequest(
        render("CoveVerify", question=question, answer=answer,
               document=document, verification_areas=areas)
    ))
    final = parse_final_response(stage2.text)
    return _suggestion(final, Pipeline.COVE, 2, stage1.latency + stage2.latency,
                       doc_ids, scores, retrieval_fired=True,
                       fallback_text=fallback_text)


# -- dispatch ----------------------------------------------------------------

def suggest(conv: Conversation, pipeline: Pipeline | str, index: CorpusIndex,
            embed_provider: EmbeddingProvider,
            articles: Mapping[str, KbArticle], gateway: LlmGateway,
            k: int = DEFAULT_K, threshold: float = DEFAULT_THRESHOLD,
            fallback_text: str = FALLBACK_TEXT) -> Suggestion:
    """Run the configured pipeline end to end for one conversation."""
    pipeline = Pipeline(pipeline)
    if pipeline == Pipeline.REACT:
        return generate_react(conv, index, embed_provider, articles, gateway,
                              k=k, threshold=threshold, fallback_text=fallback_text)
    decision = retrieve_text(index, embed_provider, conv.final_query,
                             k=k, threshold=threshold)
    if pipeline == Pipeline.BASELINE:
        return generate_baseline(conv, decision, articles, gateway, fallback_text)
    if pipeline == Pipeline.COTP:
        return generate_cotp(conv, decision, articles, gateway, fallback_text)
    return generate_cove(conv, decision, articles, gateway, fallback_text)

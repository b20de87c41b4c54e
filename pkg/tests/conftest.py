import pytest

from rps.dataset import KbArticle
from rps.embedding import ReferenceEmbedder, embed_text
from rps.gateway import MockRule, ScriptedMockGateway
from rps.generation import Conversation, Role, Utterance
from rps.index import build_index

DIM = 64


@pytest.fixture
def provider():
    return ReferenceEmbedder(dim=DIM)


@pytest.fixture
def articles():
    bodies = {
        "kb-returns": "Items can be returned within 90 days of purchase with a "
                      "receipt for a full refund.",
        "kb-shipping": "Standard shipping takes five business days. Expedited "
                       "shipping arrives in two business days.",
        "kb-warranty": "The limited warranty covers manufacturing defects for "
                       "one year from the purchase date.",
        "kb-password": "To reset a forgotten password choose Forgot password "
                       "on the sign-in page and follow the emailed link.",
    }
    return {doc_id: KbArticle(doc_id, doc_id.split("-")[1], body)
            for doc_id, body in bodies.items()}


@pytest.fixture
def exact_index(provider, articles):
    vectors = [(a.id, embed_text(provider, a.body)) for a in articles.values()]
    return build_index(vectors, "exact")


@pytest.fixture
def conversation():
    return Conversation((Utterance(Role.CUSTOMER, "Can I return an item I bought?"),))


@pytest.fixture
def mock_gateway():
    def make(rules=None, default="", **kwargs):
        return ScriptedMockGateway(rules=rules or [], default_response=default,
                                   **kwargs)
    return make


@pytest.fixture
def answer_rule():
    def make(response, latency=0.0):
        return MockRule(response=response,
                        match="reading comprehension and answer generation expert",
                        latency=latency)
    return make


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    reports = []
    for outcome in ("passed", "failed", "error"):
        reports.extend(r for r in terminalreporter.stats.get(outcome, [])
                       if getattr(r, "when", "call") == "call"
                       and "test_acceptance" in r.nodeid)
    if not reports:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for report in sorted(reports, key=lambda r: r.nodeid):
        word = "PASS" if report.passed else "FAIL"
        terminalreporter.write_line(f"{word}  {report.nodeid.split('::')[-1]}")

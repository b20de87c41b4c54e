"""Golden-dataset construction and corpus loaders.

Three ingredients make up the evaluation dataset: Q/A pairs generated
from knowledge-base articles by an LLM, pre-existing historical Q/A
pairs, and out-of-domain questions mixed in so the gate has something to
reject. Loaders for JSONL corpora and an open-format QA triple file
round out the module; every loader reports the offending line number on
malformed input.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import EmptyInput, InsufficientSamples, IoFailure, MalformedRecord
from .gateway import LlmGateway, LlmRequest
from .prompts import render

NO_ANSWER_LITERAL = "NOANSWERFOUND"


def word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class KbArticle:
    """One knowledge-base article; token_count is whitespace word count."""

    id: str
    title: str
    body: str
    token_count: int = -1

    def __post_init__(self):
        if not self.body.strip():
            raise EmptyInput(f"article {self.id!r} has an empty body")
        if self.token_count < 0:
            object.__setattr__(self, "token_count", word_count(self.body))


class QaSource(str, Enum):
    GENERATED = "generated_from_kb"
    HISTORY = "history"
    OUT_OF_DOMAIN = "out_of_domain"


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str
    source: QaSource
    article_id: str | None = None
    split: Split = Split.TRAIN

    def __post_init__(self):
        if not self.question.strip() or not self.answer.strip():
            raise EmptyInput("QA pair requires a non-empty question and answer")
        if self.source == QaSource.GENERATED and not self.article_id:
            raise ValueError("generated pairs must reference their source article")


# -- LLM-backed generation -------------------------------------------------

def generate_qa_from_article(article: KbArticle, gateway: LlmGateway,
                             n_pairs: int) -> list[QaPair]:
    """Elicit up to n_pairs question/answer pairs grounded in one article.

    Each candidate takes two gateway calls: one to propose a question,
    one to answer it strictly from the article. Candidates whose answer
    comes back as the no-answer sentinel (or blank) are dropped, so the
    result may be shorter than n_pairs.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    pairs: list[QaPair] = []
    for i in range(1, n_pairs + 1):
        question = gateway.generate(LlmRequest(
            render("QaGen", question_index=str(i), document=article.body)
        )).text.strip()
        if not question:
            continue
        answer = gateway.generate(LlmRequest(
            render("OpenQa", document=article.body, question=question)
        )).text.strip()
        if not answer or answer == NO_ANSWER_LITERAL:
            continue
        pairs.append(QaPair(question, answer, QaSource.GENERATED, article.id))
    return pairs


# -- mixing ------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetStats:
    """Counts and mean word lengths, one row per figure of the summary table."""

    n_pairs: int
    n_generated: int
    n_history: int
    n_out_of_domain: int
    mean_question_words: float
    mean_answer_words: float
    n_articles: int | None = None
    mean_article_words: float | None = None

    def rows(self) -> list[tuple[str, str]]:
        rows = []
        if self.n_articles is not None:
            rows.append(("KB articles", str(self.n_articles)))
            rows.append(("Avg. document length", f"{self.mean_article_words:.2f}"))
        rows += [
            ("Generated QA pairs", str(self.n_generated)),
            ("Historical QA pairs", str(self.n_history)),
            ("Out-of-domain QA pairs", str(self.n_out_of_domain)),
            ("Total QA pairs", str(self.n_pairs)),
            ("Avg. question length", f"{self.mean_question_words:.2f}"),
            ("Avg. answer length", f"{self.mean_answer_words:.2f}"),
        ]
        return rows


def dataset_stats(pairs: list[QaPair],
                  articles: list[KbArticle] | None = None) -> DatasetStats:
    if not pairs:
        raise EmptyInput("cannot summarize an empty dataset")
    by_source = {source: 0 for source in QaSource}
    for pair in pairs:
        by_source[pair.source] += 1
    n_articles = None
    mean_article = None
    if articles is not None:
        n_articles = len(articles)
        mean_article = sum(a.token_count for a in articles) / max(len(articles), 1)
    return DatasetStats(
        n_pairs=len(pairs),
        n_generated=by_source[QaSource.GENERATED],
        n_history=by_source[QaSource.HISTORY],
        n_out_of_domain=by_source[QaSource.OUT_OF_DOMAIN],
        mean_question_words=sum(word_count(p.question) for p in pairs) / len(pairs),
        mean_answer_words=sum(word_count(p.answer) for p in pairs) / len(pairs),
        n_articles=n_articles,
        mean_article_words=mean_article,
    )


def mix_dataset(in_domain: list[QaPair], out_domain: list[QaPair],
                ratios: dict[str, float], seed: int = 0,
                total: int | None = None) -> list[QaPair]:
    """Blend the two pools at the requested ratios with a seeded shuffle.

    Ratios are over the keys {"in_domain", "out_domain"} and must sum to
    1; a missing key means 0. When total is omitted the mix is as large
    as the pools allow at those ratios. The same seed always yields the
    same ordering.
    """
    r_in = ratios.get("in_domain", 0.0)
    r_out = ratios.get("out_domain", 0.0)
    if abs(r_in + r_out - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1 over in_domain/out_domain")
    if r_in < 0 or r_out < 0:
        raise ValueError("ratios must be non-negative")
    if total is None:
        candidates = []
        if r_in > 0:
            candidates.append(int(len(in_domain) / r_in))
        if r_out > 0:
            candidates.append(int(len(out_domain) / r_out))
        total = min(candidates) if candidates else 0
    if total < 1:
        raise InsufficientSamples("mix would be empty at these ratios")
    n_in = round(total * r_in)
    n_out = total - n_in
    if n_in > len(in_domain) or n_out > len(out_domain):
        raise InsufficientSamples(
            f"need {n_in} in-domain and {n_out} out-of-domain pairs, "
            f"have {len(in_domain)} and {len(out_domain)}")
    rng = random.Random(seed)
    chosen = rng.sample(in_domain, n_in) + rng.sample(out_domain, n_out)
    rng.shuffle(chosen)
    return chosen


# -- loaders -----------------------------------------------------------------

def _read_jsonl(path: str | Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"{path}: invalid JSON: {exc}", line_no) from exc
        if not isinstance(record, dict):
            raise MalformedRecord(f"{path}: record is not an object", line_no)
        yield line_no, record


def _require(record: dict, key: str, path, line_no: int) -> str:
    value = record.get(key)
    if not isinstance(value, str) or not value.strip():
        raise MalformedRecord(f"{path}: missing or empty field {key!r}", line_no)
    return value


def load_kb_articles(path: str | Path) -> list[KbArticle]:
    """Load a JSONL corpus of {id, title, body} articles."""
    articles = []
    seen: set[str] = set()
    for line_no, record in _read_jsonl(path):
        article_id = _require(record, "id", path, line_no)
        body = _require(record, "body", path, line_no)
        if article_id in seen:
            raise MalformedRecord(f"{path}: duplicate article id {article_id!r}", line_no)
        seen.add(article_id)
        articles.append(KbArticle(article_id, str(record.get("title", "")), body))
    return articles


def load_qa_pairs(path: str | Path) -> list[QaPair]:
    """Load a JSONL dataset of {question, answer, source, article_id?, split?}."""
    pairs = []
    for line_no, record in _read_jsonl(path):
        question = _require(record, "question", path, line_no)
        answer = _require(record, "answer", path, line_no)
        try:
            source = QaSource(record.get("source", QaSource.HISTORY.value))
            split = Split(record.get("split", Split.TRAIN.value))
            pair = QaPair(question, answer, source,
                          article_id=record.get("article_id"), split=split)
        except ValueError as exc:
            raise MalformedRecord(f"{path}: {exc}", line_no) from exc
        pairs.append(pair)
    return pairs


def save_qa_pairs(pairs: list[QaPair], path: str | Path) -> None:
    lines = []
    for pair in pairs:
        record = {
            "question": pair.question,
            "answer": pair.answer,
            "source": pair.source.value,
            "split": pair.split.value,
        }
        if pair.article_id is not None:
            record["article_id"] = pair.article_id
        lines.append(json.dumps(record, ensure_ascii=False))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


@dataclass(frozen=True)
class OpenQaStats:
    n_pairs: int
    n_unique_documents: int
    mean_question_words: float
    mean_answer_words: float
    mean_document_words: float

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("QA pairs", str(self.n_pairs)),
            ("Unique documents", str(self.n_unique_documents)),
            ("Avg. question length", f"{self.mean_question_words:.2f}"),
            ("Avg. answer length", f"{self.mean_answer_words:.2f}"),
            ("Avg. document length", f"{self.mean_document_words:.2f}"),
        ]


def load_openqa(path: str | Path,
                format: str = "triples-jsonl") -> tuple[list[KbArticle], list[QaPair]]:
    """Load {question, answer, document} triples, deduplicating documents.

    Documents are keyed by a content hash, so identical passages shared
    by several questions collapse into one article that all their pairs
    reference.
    """
    if format != "triples-jsonl":
        raise ValueError(f"unknown openqa format {format!r}")
    articles: dict[str, KbArticle] = {}
    pairs: list[QaPair] = []
    for line_no, record in _read_jsonl(path):
        question = _require(record, "question", path, line_no)
        answer = _require(record, "answer", path, line_no)
        document = _require(record, "document", path, line_no)
        digest = hashlib.blake2b(document.encode("utf-8"), digest_size=6).hexdigest()
        article_id = f"openqa-{digest}"
        if article_id not in articles:
            articles[article_id] = KbArticle(article_id, "", document)
        pairs.append(QaPair(question, answer, QaSource.HISTORY,
                            article_id=article_id, split=Split.TEST))
    return list(articles.values()), pairs


def openqa_stats(articles: list[KbArticle], pairs: list[QaPair]) -> OpenQaStats:
    if not pairs:
        raise EmptyInput("cannot summarize an empty openqa corpus")
    return OpenQaStats(
        n_pairs=len(pairs),
        n_unique_documents=len(articles),
        mean_question_words=sum(word_count(p.question) for p in pairs) / len(pairs),
        mean_answer_words=sum(word_count(p.answer) for p in pairs) / len(pairs),
        mean_document_words=sum(a.token_count for a in articles) / len(articles),
    )

"""Automated evaluation: LLM-judge verdicts, outcome rates, similarity,
grounding consistency, latency percentiles, and two-system comparison.

The judge renders the fixed few-shot prompt and classifies each
prediction as correct / incorrect / unsure; the three class rates
partition the sample exactly. Anything the judge says that does not end
in one of the three tokens is a hard error — a silent "unsure" would
quietly deflate the hallucination rate.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from scipy import stats as scipy_stats

from .dataset import KbArticle
from .embedding import EmbeddingProvider, cosine, embed_text, tokenize
from .errors import (
    EmptyInput,
    EmptyResponse,
    IoFailure,
    MalformedRecord,
    UnparseableVerdict,
)
from .gateway import LlmGateway, LlmRequest
from .prompts import render

CORRECTNESS_MARKER = "Correctness:"

_PUNCT_STRIP = ".,;:!?\"'`*()[]{}"


class VerdictValue(str, Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    UNSURE = "unsure"


@dataclass(frozen=True)
class Verdict:
    value: VerdictValue
    raw_judge_text: str


def parse_verdict(text: str) -> Verdict:
    """Classify a judge reply by its final correctness token.

    The token is read after the LAST "Correctness:" marker (the prompt's
    few-shot block contains earlier ones), or from the whole reply when
    the judge answered with the bare word. Matching is exact after
    lowercasing and stripping punctuation — "incorrect" contains
    "correct", so substring tests would misread every mismatch.
    """
    marker = text.rfind(CORRECTNESS_MARKER)
    segment = text[marker + len(CORRECTNESS_MARKER):] if marker >= 0 else text
    words = segment.strip().split()
    if not words:
        raise UnparseableVerdict("judge reply carries no verdict token", text)
    token = words[0].strip(_PUNCT_STRIP).lower()
    for value in VerdictValue:
        if token == value.value:
            return Verdict(value, text)
    raise UnparseableVerdict(f"unrecognized verdict token {token!r}", text)


def judge(question: str, ground_truth: str, prediction: str,
          gateway: LlmGateway) -> Verdict:
    """One gateway call; returns the parsed verdict."""
    if not question.strip() or not ground_truth.strip() or not prediction.strip():
        raise EmptyInput("judge requires non-empty question, ground truth, and prediction")
    reply = gateway.generate(LlmRequest(
        render("Judge", question=question, ground_truth=ground_truth,
               prediction=prediction)
    ))
    return parse_verdict(reply.text)


def judge_batch(triples: list[tuple[str, str, str]], gateway: LlmGateway,
                parallelism: int = 4) -> list[Verdict]:
    """Judge many (question, ground_truth, prediction) triples in order.

    Fan-out is bounded by ``parallelism``; exactly one gateway call is
    issued per triple regardless.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if parallelism == 1 or len(triples) <= 1:
        return [judge(q, g, p, gateway) for q, g, p in triples]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda t: judge(t[0], t[1], t[2], gateway), triples))


@dataclass(frozen=True)
class Rates:
    accuracy: float
    hallucination_rate: float
    missing_rate: float


def compute_rates(verdicts: list[Verdict]) -> Rates:
    if not verdicts:
        raise EmptyInput("cannot compute rates over zero verdicts")
    n = len(verdicts)
    counts = {value: 0 for value in VerdictValue}
    for verdict in verdicts:
        counts[verdict.value] += 1
    return Rates(
        accuracy=counts[VerdictValue.CORRECT] / n,
        hallucination_rate=counts[VerdictValue.INCORRECT] / n,
        missing_rate=counts[VerdictValue.UNSURE] / n,
    )


# -- similarity and consistency ------------------------------------------------

def semantic_similarity(generated: str, reference: str,
                        embed_provider: EmbeddingProvider) -> float:
    """Cosine between the two texts under the configured embedder."""
    return cosine(embed_text(embed_provider, generated),
                  embed_text(embed_provider, reference))


@lru_cache(maxsize=1)
def load_stopwords() -> frozenset[str]:
    path = resources.files("rps") / "resources" / "stopwords.txt"
    words = [w.strip() for w in path.read_text(encoding="utf-8").splitlines()]
    return frozenset(w for w in words if w)


def consistency_proxy(response: str, grounding_articles: list[str]) -> float:
    """Fraction of response content words found in the grounding articles.

    A verbatim extract scores 1.0 and fabricated content drags the score
    toward 0 — the ordering, not the absolute value, is what downstream
    comparisons rely on.
    """
    if not grounding_articles:
        raise EmptyInput("consistency proxy needs at least one grounding article")
    stops = load_stopwords()
    content = [t for t in tokenize(response) if t not in stops]
    if not content:
        raise EmptyResponse("response has no content words to check")
    grounded: set[str] = set()
    for article in grounding_articles:
        grounded.update(tokenize(article))
    return sum(1 for t in content if t in grounded) / len(content)


# -- latency -------------------------------------------------------------------

@dataclass(frozen=True)
class LatencySummary:
    p50: float
    p95: float
    p99: float


def percentile(samples: list[float], p: float) -> float:
    """Nearest-rank percentile: sorted 1-based index ⌈p·n⌉."""
    if not samples:
        raise EmptyInput("cannot take a percentile of zero samples")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    ordered = sorted(samples)
    rank = math.ceil(p * len(ordered))
    return ordered[rank - 1]


def latency_percentiles(samples: list[float]) -> LatencySummary:
    return LatencySummary(
        p50=percentile(samples, 0.50),
        p95=percentile(samples, 0.95),
        p99=percentile(samples, 0.99),
    )


# -- reports -------------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    """Headline metrics for one response system over one evaluation set."""

    n: int
    accuracy: float
    hallucination_rate: float
    missing_rate: float
    similarity_mean: float | None = None
    consistency_mean: float | None = None
    recall: dict[int, float] | None = None
    latency: LatencySummary | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("report needs at least one sample")
        total = self.accuracy + self.hallucination_rate + self.missing_rate
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"rates must partition the sample, got sum {total}")


@dataclass(frozen=True)
class EvalRun:
    """Report plus the per-item samples comparison needs."""

    report: EvalReport
    verdicts: tuple[Verdict, ...]
    similarity_samples: tuple[float, ...]
    consistency_samples: tuple[float, ...]


def percent_difference(a: float, b: float) -> float | None:
    """(A − B) / B × 100; None when the baseline is zero (undefined)."""
    if b == 0:
        return None
    return (a - b) / b * 100.0


def welch_t(samples_a: list[float], samples_b: list[float]) -> tuple[float, float]:
    """Welch's unequal-variance t-test, safe for degenerate samples."""
    if len(samples_a) < 2 or len(samples_b) < 2:
        raise EmptyInput("t-test needs at least two samples per side")
    var_a = max(float(scipy_stats.tvar(samples_a)), 0.0) if len(set(samples_a)) > 1 else 0.0
    var_b = max(float(scipy_stats.tvar(samples_b)), 0.0) if len(set(samples_b)) > 1 else 0.0
    if var_a == 0.0 and var_b == 0.0:
        # Degenerate: scipy returns NaN; identical constants are a perfect
        # non-difference, distinct constants a certain one.
        if samples_a[0] == samples_b[0]:
            return 0.0, 1.0
        return math.inf, 0.0
    result = scipy_stats.ttest_ind(samples_a, samples_b, equal_var=False)
    return float(result.statistic), float(result.pvalue)


@dataclass(frozen=True)
class MetricComparison:
    metric: str
    value_a: float
    value_b: float
    percent_diff: float | None  # None = undefined (zero baseline)


@dataclass(frozen=True)
class SignificanceResult:
    metric: str
    statistic: float
    p_value: float


@dataclass(frozen=True)
class ComparisonReport:
    metrics: tuple[MetricComparison, ...]
    significance: tuple[SignificanceResult, ...]


_COMPARED_METRICS = ("accuracy", "hallucination_rate", "missing_rate",
                     "similarity_mean", "consistency_mean")


def compare_systems(report_a: EvalReport, report_b: EvalReport,
                    samples_a: dict[str, list[float]] | None = None,
                    samples_b: dict[str, list[float]] | None = None) -> ComparisonReport:
    """Side-by-side metric deltas plus significance on paired samples.

    Percent differences follow the (A − B)/B × 100 convention; a zero
    baseline yields an undefined marker rather than a crash. When both
    sample dicts carry a metric's per-item values, a Welch t-test is run
    for it.
    """
    comparisons = []
    for metric in _COMPARED_METRICS:
        value_a = getattr(report_a, metric)
        value_b = getattr(report_b, metric)
        if value_a is None or value_b is None:
            continue
        comparisons.append(MetricComparison(
            metric, value_a, value_b, percent_difference(value_a, value_b)))
    significance = []
    if samples_a and samples_b:
        for metric in sorted(set(samples_a) & set(samples_b)):
            statistic, p_value = welch_t(samples_a[metric], samples_b[metric])
            significance.append(SignificanceResult(metric, statistic, p_value))
    return ComparisonReport(tuple(comparisons), tuple(significance))


# -- end-to-end over a JSONL evaluation set -------------------------------------

@dataclass(frozen=True)
class EvalItem:
    question: str
    ground_truth: str
    prediction_a: str
    prediction_b: str | None = None
    grounding_doc_ids: tuple[str, ...] = ()


def load_eval_items(path: str | Path) -> list[EvalItem]:
    """Load JSONL rows {question, ground_truth, prediction_a, prediction_b?,
    grounding_doc_ids?}; malformed rows report their line number."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    items = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"{path}: invalid JSON: {exc}", line_no) from exc
        for key in ("question", "ground_truth", "prediction_a"):
            if not isinstance(record.get(key), str) or not record[key].strip():
                raise MalformedRecord(f"{path}: missing or empty field {key!r}", line_no)
        prediction_b = record.get("prediction_b")
        if prediction_b is not None and (not isinstance(prediction_b, str)
                                         or not prediction_b.strip()):
            raise MalformedRecord(f"{path}: prediction_b present but empty", line_no)
        doc_ids = record.get("grounding_doc_ids", [])
        if not isinstance(doc_ids, list) or any(not isinstance(d, str) for d in doc_ids):
            raise MalformedRecord(f"{path}: grounding_doc_ids must be a string list", line_no)
        items.append(EvalItem(record["question"], record["ground_truth"],
                              record["prediction_a"], prediction_b, tuple(doc_ids)))
    return items


def evaluate_predictions(items: list[EvalItem], gateway: LlmGateway,
                         embed_provider: EmbeddingProvider,
                         articles: dict[str, KbArticle] | None = None,
                         which: str = "a", parallelism: int = 4,
                         latencies: list[float] | None = None) -> EvalRun:
    """Judge one prediction column of the eval set and assemble a report."""
    if not items:
        raise EmptyInput("evaluation set is empty")
    if which not in ("a", "b"):
        raise ValueError("which must be 'a' or 'b'")

    def prediction(item: EvalItem) -> str:
        if which == "a":
            return item.prediction_a
        if item.prediction_b is None:
            raise EmptyInput("item lacks prediction_b")
        return item.prediction_b

    triples = [(it.question, it.ground_truth, prediction(it)) for it in items]
    verdicts = judge_batch(triples, gateway, parallelism=parallelism)
    rates = compute_rates(verdicts)
    similarity = [semantic_similarity(prediction(it), it.ground_truth, embed_provider)
                  for it in items]
    consistency: list[float] = []
    if articles:
        for item in items:
            bodies = [articles[d].body for d in item.grounding_doc_ids if d in articles]
            if not bodies:
                continue
            try:
                consistency.append(consistency_proxy(prediction(item), bodies))
            except EmptyResponse:
                continue
    report = EvalReport(
        n=len(items),
        accuracy=rates.accuracy,
        hallucination_rate=rates.hallucination_rate,
        missing_rate=rates.missing_rate,
        similarity_mean=sum(similarity) / len(similarity),
        consistency_mean=(sum(consistency) / len(consistency)) if consistency else None,
        latency=latency_percentiles(latencies) if latencies else None,
    )
    return EvalRun(report, tuple(verdicts), tuple(similarity), tuple(consistency))

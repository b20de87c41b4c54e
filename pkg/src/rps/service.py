"""HTTP suggestion service and load-bench driver.

The app is a factory over an explicit ServiceState so tests can build
isolated instances with scripted gateways. The index reference is
swappable at runtime (atomic assignment; in-flight requests finish on
the old object), request ids are a boot nonce plus a monotone counter,
and the feedback log is append-only JSONL keyed by served request ids.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests as http_requests
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .config import Config
from .dataset import KbArticle
from .embedding import EmbeddingProvider, tokenize
from .errors import ConnectionFailure, EmptyInput, IoFailure, ProviderFailure, RpsError
from .evaluation import LatencySummary, latency_percentiles, load_stopwords
from .gateway import LlmGateway
from .generation import (
    FALLBACK_TEXT,
    Conversation,
    Pipeline,
    Role,
    Suggestion,
    Utterance,
    suggest,
)
from .index import CorpusIndex

_ACTIONS = ("accepted", "edited", "rejected")


class UtteranceModel(BaseModel):
    role: str
    text: str
    timestamp: float = 0.0


class SuggestRequestModel(BaseModel):
    conversation: list[UtteranceModel]
    k: int | None = None
    pipeline: str | None = None


class FeedbackModel(BaseModel):
    request_id: str
    action: str
    final_text: str | None = None
    agent_id: str = "unknown"
    timestamp: float | None = None


class ServiceState:
    """Everything one serving process owns; index is swappable."""

    def __init__(self, config: Config, articles: dict[str, KbArticle],
                 index: CorpusIndex | None, embed_provider: EmbeddingProvider,
                 gateway: LlmGateway, feedback_path: str | Path | None = None):
        self.config = config
        self.articles = dict(articles)
        self.index = index
        self.embed_provider = embed_provider
        self.gateway = gateway
        self.feedback_path = Path(feedback_path or config.feedback_log_path)
        self.boot_nonce = secrets.token_hex(4)
        self.started_monotonic = time.monotonic()
        self._counter = 0
        self._counter_lock = threading.Lock()
        self._feedback_lock = threading.Lock()
        self.served_ids: set[str] = set()

    def next_request_id(self) -> str:
        with self._counter_lock:
            self._counter += 1
            return f"{self.boot_nonce}-{self._counter:06d}"

    def swap_index(self, index: CorpusIndex) -> None:
        self.index = index

    @property
    def simulated_clock(self) -> bool:
        return getattr(self.gateway, "realtime", True) is False

    def append_feedback(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False)
        with self._feedback_lock:
            try:
                with open(self.feedback_path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
            except OSError as exc:
                raise IoFailure(f"cannot append feedback: {exc}") from exc


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _conversation_from_model(body: SuggestRequestModel) -> Conversation:
    utterances = [Utterance(Role(u.role), u.text, u.timestamp)
                  for u in body.conversation]
    conv = Conversation(tuple(utterances))
    if conv.final_role != Role.CUSTOMER:
        raise ValueError("final utterance must come from the Customer")
    return conv


def _overlap_tokens(suggestion: Suggestion, articles: dict[str, KbArticle]) -> list[str]:
    if not suggestion.grounding_doc_ids:
        return []
    grounded: set[str] = set()
    for doc_id in suggestion.grounding_doc_ids:
        if doc_id in articles:
            grounded.update(tokenize(articles[doc_id].body))
    stops = load_stopwords()
    hits = {t for t in tokenize(suggestion.text) if t in grounded and t not in stops}
    return sorted(hits)


def suggestion_payload(suggestion: Suggestion, latency_ms: float,
                       articles: dict[str, KbArticle]) -> dict:
    grounding_articles = [
        {"id": doc_id, "title": articles[doc_id].title, "body": articles[doc_id].body}
        for doc_id in suggestion.grounding_doc_ids if doc_id in articles
    ]
    return {
        "text": suggestion.text,
        "grounding_doc_ids": list(suggestion.grounding_doc_ids),
        "scores": list(suggestion.scores),
        "retrieval_fired": suggestion.retrieval_fired,
        "pipeline": suggestion.pipeline.value,
        "latency_ms": latency_ms,
        "word_count": suggestion.word_count,
        "within_limit": suggestion.within_limit,
        "is_fallback": suggestion.is_fallback,
        "llm_calls": suggestion.llm_calls,
        "grounding_articles": grounding_articles,
        "debug": {"overlap_tokens": _overlap_tokens(suggestion,
                                                    articles)},
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="response-prediction-service")
    app.state.rps = state
    # The agent console is a static page served from wherever; there is no
    # auth to protect, so browsers may call us from any origin.
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def malformed_body(_request: Request, exc: RequestValidationError):
        return _error(400, "malformed_request", str(exc.errors()[:3]))

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok" if state.index is not None else "degraded",
            "corpus_size": len(state.articles),
            "index_backend": state.index.backend.value if state.index else None,
            "uptime_s": time.monotonic() - state.started_monotonic,
        }

    @app.post("/v1/suggest")
    def suggest_endpoint(body: SuggestRequestModel):
        if state.index is None:
            return _error(409, "index_not_loaded", "no index loaded; build or load one first")
        try:
            conv = _conversation_from_model(body)
        except ValueError as exc:
            return _error(400, "malformed_conversation", str(exc))
        pipeline = body.pipeline or state.config.pipeline
        try:
            pipeline = Pipeline(pipeline)
        except ValueError:
            return _error(400, "unknown_pipeline", f"unknown pipeline {pipeline!r}")
        k = body.k if body.k is not None else state.config.k
        if k < 1:
            return _error(400, "invalid_k", "k must be >= 1")
        started = time.perf_counter()
        try:
            result = suggest(conv, pipeline, state.index, state.embed_provider,
                             state.articles, state.gateway,
                             k=k, threshold=state.config.threshold)
        except ProviderFailure as exc:
            if not state.config.degrade_gracefully:
                return _error(502, "provider_failure", str(exc))
            result = Suggestion(
                text=FALLBACK_TEXT, grounding_doc_ids=(), scores=(),
                retrieval_fired=False, pipeline=pipeline, llm_calls=0,
                word_count=len(FALLBACK_TEXT.split()),
                within_limit=len(FALLBACK_TEXT.split()) < 30,
                is_fallback=True, llm_seconds=0.0)
        except RpsError as exc:
            return _error(500, exc.code, str(exc))
        wall_s = time.perf_counter() - started
        latency_s = wall_s + (result.llm_seconds if state.simulated_clock else 0.0)
        request_id = state.next_request_id()
        state.served_ids.add(request_id)
        return {
            "request_id": request_id,
            "suggestions": [suggestion_payload(result, latency_s * 1000.0,
                                               state.articles)],
        }

    @app.post("/v1/feedback")
    def feedback_endpoint(body: FeedbackModel):
        action = body.action.lower()
        if action not in _ACTIONS:
            return _error(400, "malformed_feedback",
                          f"action must be one of {_ACTIONS}")
        if action == "edited" and not (body.final_text or "").strip():
            return _error(400, "malformed_feedback", "edited feedback needs final_text")
        if body.request_id not in state.served_ids:
            return _error(404, "unknown_request_id",
                          f"request id {body.request_id!r} was not served by this process")
        state.append_feedback({
            "request_id": body.request_id,
            "action": action,
            "final_text": body.final_text,
            "agent_id": body.agent_id,
            "timestamp": body.timestamp if body.timestamp is not None else time.time(),
        })
        return Response(status_code=204)

    return app


def replay_feedback(path: str | Path) -> dict[str, int]:
    """Re-derive action counts from the append-only log."""
    counts = {action: 0 for action in _ACTIONS}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read feedback log {path}: {exc}") from exc
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        counts[record["action"]] += 1
    return counts


# -- bench ---------------------------------------------------------------------

@dataclass(frozen=True)
class LoadSpec:
    n_requests: int
    concurrency: int = 1
    request_mix: tuple[Conversation, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n_requests < 1:
            raise EmptyInput("bench needs n_requests >= 1")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if not self.request_mix:
            raise EmptyInput("bench needs at least one conversation in the mix")


@dataclass(frozen=True)
class BenchReport:
    n: int
    latency: LatencySummary
    throughput_rps: float
    total_seconds: float
    mode: str  # "simulated" or "wall"


def bench_inprocess(state: ServiceState, spec: LoadSpec,
                    pipeline: Pipeline | str | None = None) -> BenchReport:
    """Drive the pipeline directly, no HTTP in the loop.

    With a simulated-clock gateway the per-request latency is the
    summed simulated LLM time, so percentiles are exact and 10k requests
    finish in seconds of wall time.
    """
    chosen = Pipeline(pipeline) if pipeline else Pipeline(state.config.pipeline)
    simulated = state.simulated_clock

    def one(i: int) -> float:
        conv = spec.request_mix[i % len(spec.request_mix)]
        started = time.perf_counter()
        result = suggest(conv, chosen, state.index, state.embed_provider,
                         state.articles, state.gateway,
                         k=state.config.k, threshold=state.config.threshold)
        wall = time.perf_counter() - started
        return result.llm_seconds if simulated else wall

    t0 = time.perf_counter()
    if spec.concurrency == 1:
        samples = [one(i) for i in range(spec.n_requests)]
    else:
        with ThreadPoolExecutor(max_workers=spec.concurrency) as pool:
            samples = list(pool.map(one, range(spec.n_requests)))
    total = time.perf_counter() - t0
    return BenchReport(
        n=spec.n_requests,
        latency=latency_percentiles(samples),
        throughput_rps=spec.n_requests / total if total > 0 else float("inf"),
        total_seconds=total,
        mode="simulated" if simulated else "wall",
    )


def bench_http(base_url: str, spec: LoadSpec, timeout: float = 30.0) -> BenchReport:
    """Drive a running service over HTTP, measuring wall latency."""
    url = base_url.rstrip("/") + "/v1/suggest"

    def one(i: int) -> float:
        conv = spec.request_mix[i % len(spec.request_mix)]
        body = {"conversation": [
            {"role": u.role.value, "text": u.text, "timestamp": u.timestamp}
            for u in conv.utterances
        ]}
        started = time.perf_counter()
        try:
            response = http_requests.post(url, json=body, timeout=timeout)
        except http_requests.RequestException as exc:
            raise ConnectionFailure(f"bench request failed: {exc}") from exc
        if response.status_code != 200:
            raise ConnectionFailure(
                f"bench request returned HTTP {response.status_code}: {response.text[:200]}")
        return time.perf_counter() - started

    t0 = time.perf_counter()
    if spec.concurrency == 1:
        samples = [one(i) for i in range(spec.n_requests)]
    else:
        with ThreadPoolExecutor(max_workers=spec.concurrency) as pool:
            samples = list(pool.map(one, range(spec.n_requests)))
    total = time.perf_counter() - t0
    return BenchReport(
        n=spec.n_requests,
        latency=latency_percentiles(samples),
        throughput_rps=spec.n_requests / total if total > 0 else float("inf"),
        total_seconds=total,
        mode="wall",
    )

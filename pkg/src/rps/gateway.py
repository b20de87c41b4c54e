"""LLM gateway: one generate() interface, a scripted mock, and a call ledger.

The ledger records every call in order (prompt, response text, latency);
pipeline cost comparisons are computed from it. Mock latencies run on a
simulated clock so 10k-request benchmarks finish in seconds while still
reporting the configured per-call delay.
"""

from __future__ import annotations

import os
import threading
import time
import re
from dataclasses import dataclass, field
from pathlib import Path

import requests
import yaml

from .errors import ProviderFailure

DEFAULT_TEMPERATURE = 0.2
DEFAULT_MAX_OUTPUT_TOKENS = 256

REMOTE_ENDPOINT_VAR = "RPS_LLM_ENDPOINT"
REMOTE_TOKEN_VAR = "RPS_LLM_TOKEN"
REMOTE_MODEL_VAR = "RPS_LLM_MODEL"


@dataclass(frozen=True)
class LlmRequest:
    prompt: str
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    model_name: str = "mock"

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    latency: float
    call_index: int


@dataclass(frozen=True)
class LedgerEntry:
    call_index: int
    prompt: str
    text: str
    latency: float


class SimulatedClock:
    """Monotone counter advanced by simulated delays; never sleeps."""

    def __init__(self):
        self._now = 0.0
        self._lock = threading.Lock()

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += seconds


class LlmGateway:
    """Base gateway: thread-safe ledger and a monotone call index."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: list[LedgerEntry] = []
        self._call_index = 0

    def _record(self, prompt: str, text: str, latency: float) -> LlmResponse:
        with self._lock:
            self._call_index += 1
            index = self._call_index
            self._entries.append(LedgerEntry(index, prompt, text, latency))
        return LlmResponse(text=text, latency=latency, call_index=index)

    def generate(self, request: LlmRequest) -> LlmResponse:
        raise NotImplementedError

    def ledger(self) -> list[LedgerEntry]:
        with self._lock:
            return list(self._entries)

    def reset_ledger(self) -> None:
        with self._lock:
            self._entries.clear()

    def total_llm_seconds(self) -> float:
        with self._lock:
            return sum(e.latency for e in self._entries)


@dataclass(frozen=True)
class MockRule:
    """First matching rule wins; ``pattern`` (regex) beats ``match`` if both set."""

    response: str
    match: str | None = None
    pattern: str | None = None
    latency: float = 0.0

    def applies(self, prompt: str) -> bool:
        if self.pattern is not None:
            return re.search(self.pattern, prompt, flags=re.MULTILINE) is not None
        if self.match is not None:
            return self.match in prompt
        return False


class ScriptedMockGateway(LlmGateway):
    """Deterministic gateway for tests and benchmarks.

    Latency is taken from the matched rule and applied to the simulated
    clock (if any); no real sleeping happens unless ``realtime=True``.
    """

    def __init__(self, rules: list[MockRule] | None = None,
                 default_response: str = "", default_latency: float = 0.0,
                 clock: SimulatedClock | None = None, realtime: bool = False):
        super().__init__()
        self.rules = list(rules or [])
        self.default_response = default_response
        self.default_latency = default_latency
        self.clock = clock or SimulatedClock()
        self.realtime = realtime

    @classmethod
    def from_rules_file(cls, path: str | Path, **kwargs) -> "ScriptedMockGateway":
        """Load rules from a YAML/JSON file: {default_response, default_latency, rules: [...]}."""
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        rules = [
            MockRule(
                response=r["response"],
                match=r.get("match"),
                pattern=r.get("pattern"),
                latency=float(r.get("latency", 0.0)),
            )
            for r in raw.get("rules", [])
        ]
        return cls(
            rules=rules,
            default_response=raw.get("default_response", ""),
            default_latency=float(raw.get("default_latency", 0.0)),
            **kwargs,
        )

    def generate(self, request: LlmRequest) -> LlmResponse:
        text, latency = self.default_response, self.default_latency
        for rule in self.rules:
            if rule.applies(request.prompt):
                text, latency = rule.response, rule.latency
                break
        if self.realtime:
            time.sleep(latency)
        else:
            self.clock.advance(latency)
        return self._record(request.prompt, text, latency)


class RemoteLlmGateway(LlmGateway):
    """HTTP text-generation gateway with retry-once on transient failure.

    Endpoint, model, and auth token come from environment variables so
    deployments never bake credentials into config files.
    """

    def __init__(self, endpoint: str, model_name: str, token: str | None = None,
                 timeout: float = 60.0):
        super().__init__()
        self.endpoint = endpoint
        self.model_name = model_name
        self.token = token
        self.timeout = timeout

    @classmethod
    def from_env(cls) -> "RemoteLlmGateway":
        endpoint = os.environ.get(REMOTE_ENDPOINT_VAR)
        if not endpoint:
            raise ProviderFailure(f"{REMOTE_ENDPOINT_VAR} is not set")
        return cls(
            endpoint=endpoint,
            model_name=os.environ.get(REMOTE_MODEL_VAR, "text-bison"),
            token=os.environ.get(REMOTE_TOKEN_VAR),
        )

    def _post_once(self, request: LlmRequest) -> str:
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        resp = requests.post(
            self.endpoint,
            json={
                "model": request.model_name if request.model_name != "mock" else self.model_name,
                "prompt": request.prompt,
                "max_output_tokens": request.max_output_tokens,
                "temperature": request.temperature,
            },
            headers=headers,
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return resp.json()["text"]

    def generate(self, request: LlmRequest) -> LlmResponse:
        start = time.monotonic()
        try:
            text = self._post_once(request)
        except (requests.ConnectionError, requests.Timeout, requests.HTTPError):
            try:
                text = self._post_once(request)
            except requests.RequestException as exc:
                raise ProviderFailure(f"llm provider failed twice: {exc}") from exc
        except requests.RequestException as exc:
            raise ProviderFailure(f"llm provider failed: {exc}") from exc
        except (KeyError, ValueError) as exc:
            raise ProviderFailure(f"malformed llm payload: {exc}") from exc
        return self._record(request.prompt, text, time.monotonic() - start)

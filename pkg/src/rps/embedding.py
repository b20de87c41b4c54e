"""Text embedding providers and cosine arithmetic.

All vectors leaving :func:`embed_text` are L2-normalized, so downstream
index math can treat cosine similarity as a plain inner product. The
deterministic :class:`ReferenceEmbedder` (signed-hash bag-of-words) is the
provider used by every test; remote providers are configured from the
environment and share the same interface.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass

import numpy as np
import requests

from .errors import DimMismatch, EmptyInput, ProviderFailure, ZeroVector

_TOKEN_SPLIT = re.compile(r"[^0-9a-zA-Z]+")

NORM_TOL = 1e-6

REMOTE_ENDPOINT_VAR = "RPS_EMBED_ENDPOINT"
REMOTE_TOKEN_VAR = "RPS_EMBED_TOKEN"


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries, dropping empties."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-length real vector produced by one provider."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def normalize(vec: EmbeddingVector) -> EmbeddingVector:
    """Return the unit-length version of ``vec``; zero vectors are rejected."""
    n = vec.norm()
    if n == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return EmbeddingVector(vec.values / n)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]; equals the dot product for unit vectors."""
    if a.dim != b.dim:
        raise DimMismatch(f"dim {a.dim} vs {b.dim}")
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    return float(np.dot(a.values, b.values) / (na * nb))


class EmbeddingProvider:
    """Base interface: a named, fixed-dimension, deterministic text embedder."""

    name: str
    dim: int

    def embed_raw(self, text: str) -> np.ndarray:
        raise NotImplementedError


class ReferenceEmbedder(EmbeddingProvider):
    """Deterministic signed-hash bag-of-words embedder.

    Each token is hashed to a bucket in [0, dim) and a sign in {-1, +1};
    token occurrences accumulate their sign into the bucket. Lexically
    overlapping texts therefore score higher than disjoint ones, which is
    all the retrieval and gating tests need.
    """

    def __init__(self, dim: int = 256, name: str = "reference"):
        if dim < 8:
            raise ValueError("reference embedder requires dim >= 8")
        self.dim = dim
        self.name = name

    @staticmethod
    def bucket_and_sign(token: str, dim: int) -> tuple[int, float]:
        h = int.from_bytes(
            hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little"
        )
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        return h % dim, sign

    def embed_raw(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise EmptyInput("text has no alphanumeric tokens")
        out = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            bucket, sign = self.bucket_and_sign(token, self.dim)
            out[bucket] += sign
        return out


class RemoteEmbeddingProvider(EmbeddingProvider):
    """HTTP embedding provider; endpoint and auth come from the environment.

    POSTs ``{"model": name, "text": ...}`` and expects ``{"embedding": [...]}``.
    Transport and protocol errors surface as ProviderFailure; retrying is the
    caller's decision.
    """

    def __init__(self, name: str, dim: int, endpoint: str, token: str | None = None,
                 timeout: float = 30.0):
        self.name = name
        self.dim = dim
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout

    @classmethod
    def from_env(cls, name: str, dim: int) -> "RemoteEmbeddingProvider":
        endpoint = os.environ.get(REMOTE_ENDPOINT_VAR)
        if not endpoint:
            raise ProviderFailure(f"{REMOTE_ENDPOINT_VAR} is not set")
        return cls(name, dim, endpoint, token=os.environ.get(REMOTE_TOKEN_VAR))

    def embed_raw(self, text: str) -> np.ndarray:
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            resp = requests.post(
                self.endpoint,
                json={"model": self.name, "text": text},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise ProviderFailure(f"embedding provider unreachable: {exc}") from exc
        try:
            return np.asarray(payload["embedding"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderFailure(f"malformed embedding payload: {exc}") from exc


def embed_text(provider: EmbeddingProvider, text: str) -> EmbeddingVector:
    """Embed non-blank text; the result is unit length and provider.dim wide."""
    if not text or not text.strip():
        raise EmptyInput("cannot embed blank text")
    raw = provider.embed_raw(text)
    vec = EmbeddingVector(raw)
    if vec.dim != provider.dim:
        raise DimMismatch(
            f"provider {provider.name} declared dim {provider.dim}, returned {vec.dim}"
        )
    return normalize(vec)


def reference_embed(text: str, dim: int) -> EmbeddingVector:
    """One-shot signed-hash bag-of-words embedding (dim >= 8)."""
    return embed_text(ReferenceEmbedder(dim=dim), text)

"""Corpus index contract shared by the three retrieval backends.

An index is immutable after build. All backends score with cosine
similarity over row-normalized copies of the stored vectors, and every
hit list breaks score ties by ascending doc id so results are
deterministic and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..embedding import EmbeddingVector
from ..errors import DimMismatch, DuplicateId, EmptyCorpus, ZeroVector


class Backend(str, Enum):
    EXACT = "exact"
    HNSW = "hnsw"
    PARTITIONED = "partitioned"


@dataclass(frozen=True)
class RetrievalHit:
    doc_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class HnswParams:
    """Graph build/search knobs; m >= 2, ef_construction >= m."""

    m: int = 16
    ef_construction: int = 200
    ef_search: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.ef_construction < self.m:
            raise ValueError("ef_construction must be >= m")
        if self.ef_search < 1:
            raise ValueError("ef_search must be >= 1")


@dataclass(frozen=True)
class PartitionedParams:
    """Cluster/probe knobs; None means derive from corpus size at build."""

    n_clusters: int | None = None
    n_probe: int | None = None
    kmeans_iters: int = 10
    kmeans_seed: int = 0

    def __post_init__(self):
        if self.n_clusters is not None and self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.kmeans_iters < 1:
            raise ValueError("kmeans_iters must be >= 1")

    def resolve(self, corpus_size: int) -> "PartitionedParams":
        n_clusters = self.n_clusters or math.ceil(math.sqrt(corpus_size))
        n_clusters = min(n_clusters, corpus_size)
        n_probe = self.n_probe or max(1, math.ceil(n_clusters / 10))
        if not 1 <= n_probe <= n_clusters:
            raise ValueError("n_probe must be in [1, n_clusters]")
        return PartitionedParams(n_clusters, n_probe, self.kmeans_iters, self.kmeans_seed)


class CorpusIndex:
    """Immutable corpus of unit vectors plus a backend search structure."""

    backend: Backend

    def __init__(self, doc_ids: list[str], matrix: np.ndarray, build_params):
        self.doc_ids = list(doc_ids)
        self.matrix = matrix
        self.build_params = build_params
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0.0):
            raise ZeroVector("corpus contains a zero vector")
        self.units = matrix / norms[:, None]
        self._id_array = np.array(self.doc_ids)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.doc_ids)

    def _check_query(self, query: EmbeddingVector, k: int) -> np.ndarray:
        if query.dim != self.dim:
            raise DimMismatch(f"query dim {query.dim} vs index dim {self.dim}")
        if k < 1:
            raise ValueError("k must be >= 1")
        norm = float(np.linalg.norm(query.values))
        if norm == 0.0:
            raise ZeroVector("query is a zero vector")
        return query.values / norm

    def _hits_from_scores(self, positions: np.ndarray, scores: np.ndarray,
                          k: int) -> list[RetrievalHit]:
        """Rank candidate positions by (-score, doc_id) and truncate to k."""
        ids = self._id_array[positions]
        order = np.lexsort((ids, -scores))[:k]
        return [
            RetrievalHit(doc_id=str(ids[i]), score=float(scores[i]), rank=rank)
            for rank, i in enumerate(order, start=1)
        ]

    def search(self, query: EmbeddingVector, k: int) -> list[RetrievalHit]:
        raise NotImplementedError


def validate_corpus(vectors: list[tuple[str, EmbeddingVector]]) -> tuple[list[str], np.ndarray]:
    if not vectors:
        raise EmptyCorpus("cannot build an index over zero documents")
    dim = vectors[0][1].dim
    seen: set[str] = set()
    for doc_id, vec in vectors:
        if vec.dim != dim:
            raise DimMismatch(f"doc {doc_id!r} has dim {vec.dim}, expected {dim}")
        if doc_id in seen:
            raise DuplicateId(f"duplicate doc id {doc_id!r}")
        seen.add(doc_id)
    matrix = np.stack([vec.values for _, vec in vectors]).astype(np.float64)
    return [doc_id for doc_id, _ in vectors], matrix

"""Vector index: build, search, persist, and measure retrieval quality."""

from __future__ import annotations

from ..embedding import EmbeddingVector
from ..errors import EmptyQuerySet, LengthMismatch
from .core import (
    Backend,
    CorpusIndex,
    HnswParams,
    PartitionedParams,
    RetrievalHit,
    validate_corpus,
)
from .exact import ExactIndex
from .hnsw import HnswIndex
from .io import load_index, save_index
from .partitioned import PartitionedIndex

__all__ = [
    "Backend",
    "CorpusIndex",
    "ExactIndex",
    "HnswIndex",
    "HnswParams",
    "PartitionedIndex",
    "PartitionedParams",
    "RetrievalHit",
    "build_index",
    "load_index",
    "measure_recall",
    "recall_at_k",
    "save_index",
    "search",
    "validate_corpus",
]


def build_index(vectors: list[tuple[str, EmbeddingVector]],
                backend: Backend | str = Backend.EXACT,
                params: HnswParams | PartitionedParams | None = None) -> CorpusIndex:
    """Validate the corpus and build the requested backend over it."""
    backend = Backend(backend)
    doc_ids, matrix = validate_corpus(vectors)
    if backend == Backend.EXACT:
        return ExactIndex(doc_ids, matrix, None)
    if backend == Backend.HNSW:
        return HnswIndex(doc_ids, matrix, params or HnswParams())
    return PartitionedIndex(doc_ids, matrix, params or PartitionedParams())


def search(index: CorpusIndex, query: EmbeddingVector, k: int) -> list[RetrievalHit]:
    return index.search(query, k)


def recall_at_k(results: list[list[RetrievalHit]], gold: list[str], k: int) -> float:
    """Fraction of queries whose gold doc id appears in their top-k hits.

    ``results`` and ``gold`` are aligned by query; hit lists may be longer
    than k (only the prefix counts), so one search at the largest k serves
    every smaller one.
    """
    if len(results) != len(gold):
        raise LengthMismatch(
            f"{len(results)} result lists vs {len(gold)} gold labels")
    if not results:
        raise EmptyQuerySet("recall needs at least one query")
    if k < 1:
        raise ValueError("k must be >= 1")
    found = sum(
        1 for hits, gold_id in zip(results, gold)
        if any(hit.doc_id == gold_id for hit in hits[:k])
    )
    return found / len(results)


def measure_recall(index: CorpusIndex,
                   queries: list[tuple[EmbeddingVector, str]],
                   ks: list[int]) -> dict[int, float]:
    """Recall@k for several k values from one search pass per query."""
    if not queries:
        raise EmptyQuerySet("recall needs at least one query")
    k_max = max(ks)
    results = [index.search(query, k_max) for query, _ in queries]
    gold = [gold_id for _, gold_id in queries]
    return {k: recall_at_k(results, gold, k) for k in sorted(ks)}

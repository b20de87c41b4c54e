"""Threshold-gated retrieval.

The gate filters every hit, not just the top one: anything scoring below
the threshold is never forwarded to generation. An empty survivor set is
a NoRetrieval decision that still carries the best (sub-threshold) score
so callers can see how close the query came. The report helper captures
both score distributions so the gate can be tuned: raising the threshold
trades in-domain retrieval rate against out-of-domain suppression.
"""

from __future__ import annotations

from dataclasses import dataclass

from .embedding import EmbeddingProvider, EmbeddingVector, embed_text
from .errors import EmptyQuerySet
from .index import CorpusIndex, RetrievalHit

DEFAULT_K = 3
DEFAULT_THRESHOLD = 0.7


@dataclass(frozen=True)
class RetrievalDecision:
    """Outcome of one gated lookup.

    ``fired`` distinguishes Grounded (hits above threshold survive) from
    NoRetrieval (none did). ``top_score`` is always the best pre-gate
    score, even when the gate did not fire, so callers can log
    near-misses.
    """

    fired: bool
    hits: tuple[RetrievalHit, ...]
    top_score: float
    threshold: float
    k: int

    @property
    def doc_ids(self) -> list[str]:
        return [hit.doc_id for hit in self.hits]


def retrieve(index: CorpusIndex, query: EmbeddingVector,
             k: int = DEFAULT_K,
             threshold: float = DEFAULT_THRESHOLD) -> RetrievalDecision:
    """Search top-k, then drop every hit scoring below the threshold.

    Hits arrive score-descending, so the survivors are a prefix and keep
    contiguous ranks from 1.
    """
    if not -1.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [-1, 1]")
    hits = index.search(query, k)
    survivors = tuple(hit for hit in hits if hit.score >= threshold)
    return RetrievalDecision(
        fired=bool(survivors),
        hits=survivors,
        top_score=hits[0].score,
        threshold=threshold,
        k=k,
    )


def retrieve_text(index: CorpusIndex, provider: EmbeddingProvider, text: str,
                  k: int = DEFAULT_K,
                  threshold: float = DEFAULT_THRESHOLD) -> RetrievalDecision:
    return retrieve(index, embed_text(provider, text), k=k, threshold=threshold)


@dataclass(frozen=True)
class ThresholdReport:
    """Top-1 score distributions for in- and out-of-domain query sets."""

    threshold: float
    in_domain_scores: tuple[float, ...]
    out_domain_scores: tuple[float, ...]
    retrieval_rate: float
    no_retrieval_rate: float

    def rates_at(self, threshold: float) -> tuple[float, float]:
        """(retrieval rate, no-retrieval rate) if the gate were moved here."""
        fired = sum(1 for s in self.in_domain_scores if s >= threshold)
        held = sum(1 for s in self.out_domain_scores if s < threshold)
        return fired / len(self.in_domain_scores), held / len(self.out_domain_scores)


def threshold_report(index: CorpusIndex,
                     in_domain: list[EmbeddingVector],
                     out_domain: list[EmbeddingVector],
                     threshold: float = DEFAULT_THRESHOLD) -> ThresholdReport:
    """Score every query and report gate behavior at ``threshold``.

    Retrieval rate is the fraction of in-domain queries whose top-1 score
    reaches the threshold; no-retrieval rate is the fraction of
    out-of-domain queries held below it. A separable corpus scores 1.0 on
    both.
    """
    if not in_domain or not out_domain:
        raise EmptyQuerySet("threshold report needs both query sets")
    in_scores = tuple(index.search(q, 1)[0].score for q in in_domain)
    out_scores = tuple(index.search(q, 1)[0].score for q in out_domain)
    return ThresholdReport(
        threshold=threshold,
        in_domain_scores=in_scores,
        out_domain_scores=out_scores,
        retrieval_rate=sum(s >= threshold for s in in_scores) / len(in_scores),
        no_retrieval_rate=sum(s < threshold for s in out_scores) / len(out_scores),
    )

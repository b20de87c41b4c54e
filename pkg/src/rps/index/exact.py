"""Brute-force cosine KNN; the oracle the approximate backends are judged against."""

from __future__ import annotations

import numpy as np

from ..embedding import EmbeddingVector
from .core import Backend, CorpusIndex, RetrievalHit


class ExactIndex(CorpusIndex):
    backend = Backend.EXACT

    def __init__(self, doc_ids, matrix, build_params=None):
        super().__init__(doc_ids, matrix, build_params)

    def search(self, query: EmbeddingVector, k: int) -> list[RetrievalHit]:
        q = self._check_query(query, k)
        scores = self.units @ q
        return self._hits_from_scores(np.arange(len(self)), scores, k)

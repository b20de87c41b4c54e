"""Cluster-pruned search: spherical k-means partitions plus exact rerank.

Documents are assigned to the nearest of n_clusters unit centroids; a
query probes the n_probe closest centroids and scores only their members
with exact cosine. Probing every cluster therefore degenerates to the
exhaustive backend, which is how the fidelity tests pin it down.
"""

from __future__ import annotations

import numpy as np

from ..embedding import EmbeddingVector
from .core import Backend, CorpusIndex, PartitionedParams, RetrievalHit


def spherical_kmeans(units: np.ndarray, n_clusters: int, iters: int,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Cluster unit rows by cosine; returns (unit centroids, assignments).

    Centroids are re-normalized after every mean update so assignment can
    stay a plain argmax of dot products. A cluster that loses all members
    is re-seeded with the point farthest from its current centroid, which
    keeps exactly n_clusters non-empty partitions.
    """
    n = units.shape[0]
    rng = np.random.default_rng(seed)
    start = rng.choice(n, size=n_clusters, replace=False)
    centroids = units[start].copy()
    assignments = np.zeros(n, dtype=np.int64)
    for _ in range(iters):
        sims = units @ centroids.T
        new_assignments = np.argmax(sims, axis=1)
        for c in range(n_clusters):
            members = np.flatnonzero(new_assignments == c)
            if members.size == 0:
                farthest = int(np.argmin(np.max(sims, axis=1)))
                new_assignments[farthest] = c
                centroids[c] = units[farthest]
                continue
            mean = units[members].mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 0.0:
                centroids[c] = mean / norm
        if np.array_equal(new_assignments, assignments):
            assignments = new_assignments
            break
        assignments = new_assignments
    # Final pass so assignments match the last centroid update.
    sims = units @ centroids.T
    assignments = np.argmax(sims, axis=1)
    for c in range(n_clusters):
        if not np.any(assignments == c):
            farthest = int(np.argmin(np.max(sims, axis=1)))
            assignments[farthest] = c
            centroids[c] = units[farthest]
    return centroids, assignments


class PartitionedIndex(CorpusIndex):
    backend = Backend.PARTITIONED

    def __init__(self, doc_ids, matrix, params: PartitionedParams,
                 centroids: np.ndarray | None = None,
                 assignments: np.ndarray | None = None):
        super().__init__(doc_ids, matrix, params)
        self.params = params.resolve(len(doc_ids))
        if centroids is None:
            if self.params.n_clusters >= len(self):
                # One singleton partition per document; no iterations needed.
                self.centroids = self.units.copy()
                self.assignments = np.arange(len(self), dtype=np.int64)
            else:
                self.centroids, self.assignments = spherical_kmeans(
                    self.units, self.params.n_clusters,
                    self.params.kmeans_iters, self.params.kmeans_seed,
                )
        else:
            self.centroids = centroids
            self.assignments = assignments
        self.members: list[np.ndarray] = [
            np.flatnonzero(self.assignments == c)
            for c in range(self.centroids.shape[0])
        ]

    def search(self, query: EmbeddingVector, k: int,
               n_probe: int | None = None) -> list[RetrievalHit]:
        q = self._check_query(query, k)
        if k >= len(self):
            # Pruning can only drop documents the caller asked for; score all.
            scores = self.units @ q
            return self._hits_from_scores(np.arange(len(self)), scores, k)
        probe = n_probe if n_probe is not None else self.params.n_probe
        probe = min(max(probe, 1), self.centroids.shape[0])
        centroid_sims = self.centroids @ q
        probed = np.argsort(-centroid_sims, kind="stable")[:probe]
        pools = [self.members[c] for c in probed if self.members[c].size]
        if not pools:
            return []
        positions = np.concatenate(pools)
        scores = self.units[positions] @ q
        return self._hits_from_scores(positions, scores, k)

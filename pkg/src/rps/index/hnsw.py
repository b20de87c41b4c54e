"""Layered navigable small-world graph for approximate cosine KNN.

Node levels follow floor(-ln(u) / ln(m)); queries greedy-descend the
upper layers with a single candidate, then run a best-first expansion at
layer 0 with an ef_search-wide candidate list. Neighbor selection uses
the diversity heuristic (closer to the query than to any already-selected
neighbor) with pruned links kept to fill spare slots, which keeps the
base layer well connected.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from ..embedding import EmbeddingVector
from .core import Backend, CorpusIndex, HnswParams, RetrievalHit


class HnswIndex(CorpusIndex):
    backend = Backend.HNSW

    def __init__(self, doc_ids, matrix, params: HnswParams,
                 neighbors: list[list[list[int]]] | None = None,
                 levels: list[int] | None = None, entry_point: int = -1):
        super().__init__(doc_ids, matrix, params)
        self.params = params
        self.m0 = 2 * params.m
        if neighbors is None:
            self.levels: list[int] = []
            self.neighbors: list[list[list[int]]] = []
            self.entry_point = -1
            self.max_level = -1
            self._build()
        else:
            # Restored from disk: the graph is authoritative, never rebuilt.
            self.levels = levels
            self.neighbors = neighbors
            self.entry_point = entry_point
            self.max_level = max(levels) if levels else -1

    # -- construction ----------------------------------------------------

    def _build(self) -> None:
        rng = np.random.default_rng(self.params.seed)
        mult = 1.0 / math.log(self.params.m)
        for node in range(len(self)):
            u = rng.random()
            while u == 0.0:
                u = rng.random()
            level = int(math.floor(-math.log(u) * mult))
            self.levels.append(level)
            self.neighbors.append([[] for _ in range(level + 1)])
            if self.entry_point < 0:
                self.entry_point = node
                self.max_level = level
                continue
            self._insert(node, level)
            if level > self.max_level:
                self.entry_point = node
                self.max_level = level

    def _insert(self, node: int, level: int) -> None:
        q = self.units[node]
        entry_points = [self.entry_point]
        for layer in range(self.max_level, level, -1):
            entry_points = [n for _, n in self._search_layer(q, entry_points, layer, 1)]
        for layer in range(min(level, self.max_level), -1, -1):
            candidates = self._search_layer(
                q, entry_points, layer, self.params.ef_construction
            )
            cap = self.m0 if layer == 0 else self.params.m
            selected = self._select_neighbors(q, candidates, cap)
            self.neighbors[node][layer] = list(selected)
            for nb in selected:
                nb_links = self.neighbors[nb][layer]
                nb_links.append(node)
                if len(nb_links) > cap:
                    nb_vec = self.units[nb]
                    dists = 1.0 - self.units[nb_links] @ nb_vec
                    ranked = sorted(zip(dists.tolist(), nb_links))
                    self.neighbors[nb][layer] = self._select_neighbors(nb_vec, ranked, cap)
            entry_points = [n for _, n in candidates]

    def _select_neighbors(self, q: np.ndarray, candidates: list[tuple[float, int]],
                          cap: int) -> list[int]:
        """Diversity-aware selection; falls back to pruned links to fill cap."""
        if len(candidates) <= cap:
            return [n for _, n in candidates]
        selected: list[int] = []
        discarded: list[tuple[float, int]] = []
        for dist, node in candidates:
            if len(selected) == cap:
                break
            if not selected:
                selected.append(node)
                continue
            to_selected = 1.0 - self.units[selected] @ self.units[node]
            if dist < float(np.min(to_selected)):
                selected.append(node)
            else:
                discarded.append((dist, node))
        for dist, node in discarded:
            if len(selected) == cap:
                break
            selected.append(node)
        return selected

    # -- search ----------------------------------------------------------

    def _search_layer(self, q: np.ndarray, entry_points: list[int], layer: int,
                      ef: int) -> list[tuple[float, int]]:
        visited = set(entry_points)
        entry_dists = 1.0 - self.units[entry_points] @ q
        candidates: list[tuple[float, int]] = []
        best: list[tuple[float, int]] = []
        for dist, node in zip(entry_dists.tolist(), entry_points):
            heapq.heappush(candidates, (dist, node))
            heapq.heappush(best, (-dist, node))
        while candidates:
            dist, node = heapq.heappop(candidates)
            if len(best) >= ef and dist > -best[0][0]:
                break
            links = self.neighbors[node][layer] if layer < len(self.neighbors[node]) else []
            fresh = [n for n in links if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            fresh_dists = 1.0 - self.units[fresh] @ q
            for nb, nb_dist in zip(fresh, fresh_dists.tolist()):
                if len(best) < ef or nb_dist < -best[0][0]:
                    heapq.heappush(candidates, (nb_dist, nb))
                    heapq.heappush(best, (-nb_dist, nb))
                    if len(best) > ef:
                        heapq.heappop(best)
        return sorted((-neg, node) for neg, node in best)

    def search(self, query: EmbeddingVector, k: int,
               ef_search: int | None = None) -> list[RetrievalHit]:
        q = self._check_query(query, k)
        if k >= len(self):
            scores = self.units @ q
            return self._hits_from_scores(np.arange(len(self)), scores, k)
        ef = max(ef_search if ef_search is not None else self.params.ef_search, k)
        entry_points = [self.entry_point]
        for layer in range(self.max_level, 0, -1):
            entry_points = [n for _, n in self._search_layer(q, entry_points, layer, 1)]
        candidates = self._search_layer(q, entry_points, 0, ef)
        positions = np.array([n for _, n in candidates], dtype=np.int64)
        scores = self.units[positions] @ q
        return self._hits_from_scores(positions, scores, k)

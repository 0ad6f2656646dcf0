"""Weighted centroid store with approximate nearest-neighbor search.

One unit vector per cluster, kept in a navigable small-world graph so the
closest centroid can be found in roughly logarithmic time. For indices no
larger than the search breadth the query falls back to an exhaustive dot
product scan, which is both faster at that scale and exactly correct (the
acceptance tests rely on this). Ties on similarity break toward the lowest
cluster id.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import ClusterNotFoundError, SnapshotFormatError

UNIT_TOL = 1e-6
NORM_EPS = 1e-12

SNAPSHOT_VERSION = 1


class ParseState(enum.Enum):
    UNPARSED = "unparsed"
    PARSED = "parsed"
    FAILED = "failed"


@dataclass
class ClusterCentroid:
    cluster_id: int
    vector: np.ndarray
    weight: int = 1
    template_id: Optional[int] = None
    parse_state: ParseState = ParseState.UNPARSED


@dataclass(frozen=True)
class SearchHit:
    cluster_id: int
    similarity: float


def _check_unit(vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float64)
    if abs(np.linalg.norm(vector) - 1.0) > UNIT_TOL:
        raise ValueError("vector is not unit-norm")
    return vector


@dataclass
class _Node:
    level: int
    # neighbors[l] = set of cluster ids linked at layer l
    neighbors: list = field(default_factory=list)


class CentroidIndex:
    """HNSW-backed map cluster_id -> ClusterCentroid with cosine search."""

    def __init__(self, m: int = 16, ef_construction: int = 200,
                 ef_search: int = 64, seed: int = 0):
        self.m = m
        self.m0 = 2 * m
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self._ml = 1.0 / math.log(m)
        self._rng = np.random.default_rng(seed)
        self._centroids: dict[int, ClusterCentroid] = {}
        self._nodes: dict[int, _Node] = {}
        self._entry: Optional[int] = None
        self._next_id = 0

    def __len__(self) -> int:
        return len(self._centroids)

    def __contains__(self, cluster_id: int) -> bool:
        return cluster_id in self._centroids

    def get(self, cluster_id: int) -> ClusterCentroid:
        try:
            return self._centroids[cluster_id]
        except KeyError:
            raise ClusterNotFoundError(f"cluster {cluster_id} not in index") from None

    def ids(self) -> list[int]:
        return sorted(self._centroids)

    def centroids(self) -> Iterator[ClusterCentroid]:
        for cid in self.ids():
            yield self._centroids[cid]

    def total_weight(self) -> int:
        return sum(c.weight for c in self._centroids.values())

    # ---- graph internals -------------------------------------------------

    def _sim(self, a: np.ndarray, cid: int) -> float:
        return float(a @ self._centroids[cid].vector)

    def _max_degree(self, layer: int) -> int:
        return self.m0 if layer == 0 else self.m

    def _search_layer(self, query: np.ndarray, entry: int, layer: int,
                      ef: int) -> list[tuple[float, int]]:
        """Best-first search; returns up to ef (sim, id) pairs, best first."""
        visited = {entry}
        start = (self._sim(query, entry), entry)
        candidates = [start]  # max-heap by sim (kept sorted, small ef)
        results = [start]
        while candidates:
            candidates.sort(key=lambda t: (-t[0], t[1]))
            c_sim, c_id = candidates.pop(0)
            worst = min(results)[0] if len(results) >= ef else -2.0
            if c_sim < worst:
                break
            for nb in self._nodes[c_id].neighbors[layer]:
                if nb in visited:
                    continue
                visited.add(nb)
                sim = self._sim(query, nb)
                if len(results) < ef or sim > min(results)[0]:
                    candidates.append((sim, nb))
                    results.append((sim, nb))
                    if len(results) > ef:
                        results.remove(min(results))
        results.sort(key=lambda t: (-t[0], t[1]))
        return results

    def _link(self, cid: int, layer: int, candidates: list[tuple[float, int]]):
        node = self._nodes[cid]
        chosen = [nb for _, nb in candidates[: self._max_degree(layer)] if nb != cid]
        node.neighbors[layer] = set(chosen)
        for nb in chosen:
            nb_set = self._nodes[nb].neighbors[layer]
            nb_set.add(cid)
            if len(nb_set) > self._max_degree(layer):
                vec = self._centroids[nb].vector
                worst = min(nb_set, key=lambda x: (self._sim(vec, x), -x))
                nb_set.discard(worst)
                self._nodes[worst].neighbors[layer].discard(nb)

    def _graph_insert(self, cid: int):
        level = int(-math.log(max(self._rng.random(), 1e-300)) * self._ml)
        node = _Node(level=level, neighbors=[set() for _ in range(level + 1)])
        self._nodes[cid] = node
        if self._entry is None:
            self._entry = cid
            return
        entry = self._entry
        entry_level = self._nodes[entry].level
        query = self._centroids[cid].vector
        cur = entry
        for layer in range(entry_level, level, -1):
            cur = self._search_layer(query, cur, layer, 1)[0][1]
        for layer in range(min(level, entry_level), -1, -1):
            found = self._search_layer(query, cur, layer, self.ef_construction)
            self._link(cid, layer, found)
            cur = found[0][1]
        if level > entry_level:
            self._entry = cid

    def _graph_remove(self, cid: int):
        node = self._nodes.pop(cid)
        for layer, nbs in enumerate(node.neighbors):
            for nb in nbs:
                self._nodes[nb].neighbors[layer].discard(cid)
            # repair: cross-link the orphaned neighborhood
            nbs = sorted(nbs)
            for a in nbs:
                vec = self._centroids[a].vector
                a_set = self._nodes[a].neighbors[layer]
                for b in nbs:
                    if b == a or b in a_set:
                        continue
                    if len(a_set) < self._max_degree(layer):
                        a_set.add(b)
                        self._nodes[b].neighbors[layer].add(a)
        if self._entry == cid:
            self._entry = max(
                self._nodes, key=lambda x: (self._nodes[x].level, -x), default=None
            )

    # ---- public operations -----------------------------------------------

    def insert(self, vector: np.ndarray, weight: int = 1,
               template_id: Optional[int] = None,
               parse_state: ParseState = ParseState.UNPARSED) -> int:
        vector = _check_unit(vector)
        cid = self._next_id
        self._next_id += 1
        self._centroids[cid] = ClusterCentroid(
            cluster_id=cid, vector=vector, weight=weight,
            template_id=template_id, parse_state=parse_state,
        )
        self._graph_insert(cid)
        return cid

    def nearest(self, query: np.ndarray,
                exclude: Optional[int] = None) -> Optional[SearchHit]:
        query = np.asarray(query, dtype=np.float64)
        live = [cid for cid in self._centroids if cid != exclude]
        if not live:
            return None
        if len(self._centroids) <= self.ef_search:
            # exact scan; lowest id wins ties
            best = max(live, key=lambda cid: (self._sim(query, cid), -cid))
            return SearchHit(best, self._sim(query, best))
        entry = self._entry
        cur = entry
        for layer in range(self._nodes[entry].level, 0, -1):
            cur = self._search_layer(query, cur, layer, 1)[0][1]
        found = self._search_layer(query, cur, 0, self.ef_search)
        for sim, cid in found:
            if cid != exclude:
                return SearchHit(cid, sim)
        # excluded id was the only one reachable; fall back to a scan
        best = max(live, key=lambda cid: (self._sim(query, cid), -cid))
        return SearchHit(best, self._sim(query, best))

    def update_moving_average(self, cluster_id: int,
                              incoming: np.ndarray) -> ClusterCentroid:
        """Move the centroid toward the incoming vector by 1/(w+1), then
        renormalize. The weight always increments."""
        incoming = _check_unit(incoming)
        centroid = self.get(cluster_id)
        moved = centroid.vector + (incoming - centroid.vector) / (centroid.weight + 1)
        centroid.weight += 1
        norm = np.linalg.norm(moved)
        if norm < NORM_EPS:
            # antipodal cancellation; keep the old direction
            return centroid
        centroid.vector = moved / norm
        self._graph_remove(cluster_id)
        self._graph_insert(cluster_id)
        return centroid

    def remove(self, cluster_id: int) -> None:
        if cluster_id not in self._centroids:
            raise ClusterNotFoundError(f"cluster {cluster_id} not in index")
        self._graph_remove(cluster_id)
        del self._centroids[cluster_id]

    # ---- snapshots ---------------------------------------------------------

    def snapshot(self, path: str) -> None:
        doc = {
            "version": SNAPSHOT_VERSION,
            "next_id": self._next_id,
            "params": {"m": self.m, "ef_construction": self.ef_construction,
                       "ef_search": self.ef_search},
            "centroids": [
                {
                    "id": c.cluster_id,
                    "weight": c.weight,
                    "template_id": c.template_id,
                    "parse_state": c.parse_state.value,
                    "vector": c.vector.tolist(),
                }
                for c in self.centroids()
            ],
        }
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str, seed: int = 0) -> "CentroidIndex":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise SnapshotFormatError(f"cannot parse snapshot {path}: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("version") != SNAPSHOT_VERSION:
            raise SnapshotFormatError(
                f"unsupported snapshot version in {path}: {doc.get('version') if isinstance(doc, dict) else doc!r}"
            )
        params = doc.get("params", {})
        index = cls(m=params.get("m", 16),
                    ef_construction=params.get("ef_construction", 200),
                    ef_search=params.get("ef_search", 64), seed=seed)
        try:
            for entry in doc["centroids"]:
                cid = entry["id"]
                index._centroids[cid] = ClusterCentroid(
                    cluster_id=cid,
                    vector=_check_unit(np.array(entry["vector"], dtype=np.float64)),
                    weight=int(entry["weight"]),
                    template_id=entry["template_id"],
                    parse_state=ParseState(entry["parse_state"]),
                )
                index._graph_insert(cid)
            index._next_id = doc["next_id"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SnapshotFormatError(f"malformed snapshot {path}: {exc}") from exc
        return index

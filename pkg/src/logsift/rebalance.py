"""Periodic cluster merging to repair drift and parallel-ingest duplicates.

A pass walks a snapshot of cluster ids in ascending order. For each cluster
the closest *other* centroid is looked up; if the two are at least as
similar as the clustering threshold they are merged into a fresh cluster
whose vector is the weight-proportional average, and the merged cluster is
re-examined at the same position so chains of merges collapse in one pass.
Each merge strictly decreases the cluster count, so the pass terminates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClusterNotFoundError
from .index import CentroidIndex, ParseState


@dataclass(frozen=True)
class MergeEvent:
    absorbed_ids: tuple[int, int]
    surviving_id: int
    similarity: float


@dataclass
class MergeReport:
    clusters_before: int
    clusters_after: int
    passes: int = 1
    merges: list[MergeEvent] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "clusters_before": self.clusters_before,
            "clusters_after": self.clusters_after,
            "passes": self.passes,
            "merges": [
                {"absorbed_ids": list(m.absorbed_ids),
                 "surviving_id": m.surviving_id,
                 "similarity": m.similarity}
                for m in self.merges
            ],
        }


def merge_pair(index: CentroidIndex, id_a: int, id_b: int) -> int:
    """Replace two clusters by their weight-proportional average.

    The merged template comes from the heavier constituent (older id on a
    tie); if either side is unparsed the merged cluster is unparsed again so
    the parser revisits it.
    """
    if id_a == id_b:
        raise ValueError("cannot merge a cluster with itself")
    a = index.get(id_a)
    b = index.get(id_b)
    merged = (a.weight * a.vector + b.weight * b.vector) / (a.weight + b.weight)
    norm = np.linalg.norm(merged)
    if norm < 1e-12:
        raise ValueError("merged centroid is degenerate (antipodal constituents)")
    winner = a if (a.weight, -a.cluster_id) >= (b.weight, -b.cluster_id) else b
    if a.parse_state == ParseState.PARSED and b.parse_state == ParseState.PARSED:
        state, template_id = ParseState.PARSED, winner.template_id
    else:
        state, template_id = ParseState.UNPARSED, None
    weight = a.weight + b.weight
    index.remove(id_a)
    index.remove(id_b)
    return index.insert(merged / norm, weight=weight,
                        template_id=template_id, parse_state=state)


def rebalance(index: CentroidIndex, threshold: float) -> MergeReport:
    """One merging pass at the given cosine threshold."""
    before = len(index)
    report = MergeReport(clusters_before=before, clusters_after=before)
    work = index.ids()
    i = 0
    while i < len(work):
        cid = work[i]
        if cid not in index:
            i += 1
            continue
        hit = index.nearest(index.get(cid).vector, exclude=cid)
        if hit is not None and hit.similarity >= threshold:
            survivor = merge_pair(index, cid, hit.cluster_id)
            report.merges.append(MergeEvent(
                absorbed_ids=(cid, hit.cluster_id),
                surviving_id=survivor,
                similarity=hit.similarity,
            ))
            # re-process the merged vector at the current position
            work[i] = survivor
        else:
            i += 1
    report.clusters_after = len(index)
    return report

"""Co-cluster grid and fuzzy relation coefficients between user and page clusters."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .clustering import ClusteringResult
from .ingest import HitMatrix

__all__ = [
    "CoClusterGrid",
    "canonical_order",
    "build_grid",
    "relation_page_normalized",
    "relation_user_normalized",
    "top_interest",
]


@dataclass(frozen=True)
class CoClusterGrid:
    """k_u x k_p blocks of a hit matrix.

    ``user_clusters[i]`` / ``page_clusters[j]`` hold sorted member indices.
    ``r1`` normalizes block hits within each page cluster (columns sum to 1);
    ``r2`` normalizes within each user cluster (rows sum to 1).
    """

    user_clusters: tuple[tuple[int, ...], ...]
    page_clusters: tuple[tuple[int, ...], ...]
    block_hits: np.ndarray | None
    r1: np.ndarray | None = None
    r2: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        if self.block_hits is not None:
            return self.block_hits.shape
        ref = self.r1 if self.r1 is not None else self.r2
        return ref.shape


def canonical_order(assignments) -> tuple[tuple[int, ...], ...]:
    """Group indices by label, ordered by descending size then lowest member.

    Empty labels are dropped.
    """
    labels = np.asarray(assignments)
    groups = {}
    for idx, label in enumerate(labels.tolist()):
        groups.setdefault(label, []).append(idx)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), g[0]))
    return tuple(tuple(g) for g in ordered)


def _labels_of(clustering, expected: int, what: str) -> np.ndarray:
    labels = clustering.assignments if isinstance(clustering, ClusteringResult) else clustering
    labels = np.asarray(labels)
    if labels.shape != (expected,):
        raise ValueError(f"{what} assignments have length {labels.size}, expected {expected}")
    return labels


def build_grid(matrix, users, pages) -> CoClusterGrid:
    """Sum hits over every (user cluster, page cluster) block and fill both relation matrices.

    ``users`` and ``pages`` are ClusteringResults or plain label vectors.
    Clusters are renumbered in :func:`canonical_order`.
    """
    counts = matrix.counts if isinstance(matrix, HitMatrix) else np.asarray(matrix)
    n, m = counts.shape
    user_clusters = canonical_order(_labels_of(users, n, "user"))
    page_clusters = canonical_order(_labels_of(pages, m, "page"))

    blocks = np.zeros((len(user_clusters), len(page_clusters)), dtype=np.int64)
    for i, rows in enumerate(user_clusters):
        row_sums = counts[list(rows)].sum(axis=0)
        for j, cols in enumerate(page_clusters):
            blocks[i, j] = row_sums[list(cols)].sum()

    grid = CoClusterGrid(user_clusters, page_clusters, blocks)
    return replace(grid, r1=relation_page_normalized(grid), r2=relation_user_normalized(grid))


def _share(blocks: np.ndarray, axis: int) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=np.float64)
    totals = blocks.sum(axis=axis, keepdims=True)
    return np.divide(blocks, totals, out=np.zeros_like(blocks), where=totals != 0)


def relation_page_normalized(grid: CoClusterGrid) -> np.ndarray:
    """Share of each page cluster's hits coming from each user cluster.

    ``r1[i, j] = block_hits[i, j] / sum_a block_hits[a, j]``; a page cluster
    with no hits gives a zero column.
    """
    return _share(grid.block_hits, axis=0)


def relation_user_normalized(grid: CoClusterGrid) -> np.ndarray:
    """Share of each user cluster's hits landing in each page cluster.

    ``r2[i, j] = block_hits[i, j] / sum_b block_hits[i, b]``; a user cluster
    with no hits gives a zero row.
    """
    return _share(grid.block_hits, axis=1)


def top_interest(
    grid: CoClusterGrid,
    *,
    user_cluster: int | None = None,
    page_cluster: int | None = None,
) -> list[tuple[int, float]]:
    """Rank clusters on the other axis by relation coefficient, highest first.

    Pass exactly one of ``user_cluster`` (ranks page clusters by ``r2``) or
    ``page_cluster`` (ranks user clusters by ``r1``). Indices are 0-based;
    ties go to the lower index.
    """
    if (user_cluster is None) == (page_cluster is None):
        raise ValueError("pass exactly one of user_cluster or page_cluster")
    if user_cluster is not None:
        table, idx, name = grid.r2, user_cluster, "user"
    else:
        table, idx, name = grid.r1, page_cluster, "page"
    if table is None:
        raise ValueError("relation coefficients have not been computed for this grid")
    table = np.asarray(table)
    if user_cluster is None:
        table = table.T
    if not 0 <= idx < table.shape[0]:
        raise IndexError(f"{name} cluster {idx} out of range [0, {table.shape[0]})")
    scores = table[idx]
    order = sorted(range(len(scores)), key=lambda c: (-scores[c], c))
    return [(c, float(scores[c])) for c in order]

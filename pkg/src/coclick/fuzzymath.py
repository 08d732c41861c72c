"""Fuzzy membership subsets and min/max fuzzy similarity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import HitMatrix

__all__ = [
    "FuzzySubsets",
    "SimilarityMatrix",
    "user_fuzzy_subsets",
    "page_fuzzy_subsets",
    "fuzzy_subsets",
    "fuzzy_similarity",
    "similarity_matrix",
]

AXES = ("users", "pages")


def _counts(matrix) -> np.ndarray:
    if isinstance(matrix, HitMatrix):
        return matrix.counts
    return np.asarray(matrix)


def _normalize(a: np.ndarray, axis: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    totals = a.sum(axis=axis, keepdims=True)
    # all-zero rows/columns stay zero
    return np.divide(a, totals, out=np.zeros_like(a), where=totals != 0)


def user_fuzzy_subsets(matrix) -> np.ndarray:
    """Each user's hits as a fraction of that user's total: rows sum to 1."""
    return _normalize(_counts(matrix), axis=1)


def page_fuzzy_subsets(matrix) -> np.ndarray:
    """Each page's hits as a fraction of that page's total: columns sum to 1."""
    return _normalize(_counts(matrix), axis=0)


@dataclass(frozen=True)
class FuzzySubsets:
    """Membership matrices, both n x m.

    Row i of ``user_memberships`` is user i's fuzzy subset over pages;
    column j of ``page_memberships`` is page j's fuzzy subset over users.
    """

    user_memberships: np.ndarray
    page_memberships: np.ndarray

    def vectors(self, axis: str) -> np.ndarray:
        """Membership vectors along ``axis``, one per row of the result."""
        if axis == "users":
            return self.user_memberships
        if axis == "pages":
            return self.page_memberships.T
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")


def fuzzy_subsets(matrix) -> FuzzySubsets:
    return FuzzySubsets(user_fuzzy_subsets(matrix), page_fuzzy_subsets(matrix))


def fuzzy_similarity(x, y) -> float:
    """sum(min(x, y)) / sum(max(x, y)); two all-zero vectors count as identical."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"vectors must be 1-d and equal length, got {x.shape} and {y.shape}")
    if (x < 0).any() or (y < 0).any():
        raise ValueError("membership vectors must be nonnegative")
    top = np.minimum(x, y).sum()
    bottom = np.maximum(x, y).sum()
    if bottom == 0:
        return 1.0
    return float(top / bottom)


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray
    axis: str

    @property
    def size(self) -> int:
        return self.values.shape[0]


def similarity_matrix(subsets: FuzzySubsets, axis: str, block: int = 128) -> SimilarityMatrix:
    """Dense pairwise fuzzy similarity between all membership vectors on ``axis``.

    Rows are processed in blocks of ``block`` vectors; each cell is an
    independent ratio, so the block size does not affect the result.
    """
    vecs = np.ascontiguousarray(subsets.vectors(axis), dtype=np.float64)
    k = vecs.shape[0]
    out = np.empty((k, k), dtype=np.float64)
    for start in range(0, k, block):
        chunk = vecs[start:start + block, None, :]
        top = np.minimum(chunk, vecs[None, :, :]).sum(axis=2)
        bottom = np.maximum(chunk, vecs[None, :, :]).sum(axis=2)
        out[start:start + block] = np.divide(
            top, bottom, out=np.ones_like(top), where=bottom != 0
        )
    return SimilarityMatrix(out, axis)

"""Seeded Lloyd K-Means with Davies-Bouldin restart selection."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ClusteringResult",
    "DegenerateClusteringError",
    "kmeans",
    "davies_bouldin",
    "kmeans_best_of",
]

MAX_ITER = 300
TOL = 1e-9
RESTARTS = 10


class DegenerateClusteringError(RuntimeError):
    """A clustering for which the Davies-Bouldin index is undefined."""

    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        self.pair = pair
        super().__init__(message)


@dataclass(frozen=True)
class ClusteringResult:
    """Outcome of one K-Means run.

    ``inertia_history[t]`` is the total within-cluster squared distance right
    after the assignment step of iteration ``t + 1``. ``db_index`` is None when
    the index is undefined (k = 1, or two centroids coincide).
    ``restart_scores`` is filled in by :func:`kmeans_best_of` only.
    """

    k: int
    assignments: np.ndarray
    centroids: np.ndarray
    db_index: float | None
    seed: int
    iterations: int
    inertia: float
    inertia_history: tuple[float, ...] = ()
    restart_scores: tuple[tuple[int, float | None], ...] = field(default=())

    def members(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignments == c) for c in range(self.k)]


def _check_features(features, k: int) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"features must be 2-d, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("features must be finite")
    if not 1 <= k <= x.shape[0]:
        raise ValueError(f"k must be in [1, {x.shape[0]}], got {k}")
    return x


def _sq_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # one pass per centroid: every row reduces in the same order,
    # so identical rows get bit-identical distances
    d = np.empty((x.shape[0], centroids.shape[0]))
    for c, center in enumerate(centroids):
        diff = x - center
        d[:, c] = np.einsum("ij,ij->i", diff, diff)
    return d


def _means(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    return np.stack([x[labels == c].mean(axis=0) for c in range(k)])


def _repair_empty(labels: np.ndarray, dist: np.ndarray, k: int) -> None:
    """Give each empty cluster the point farthest from its own centroid, in place."""
    sizes = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(sizes == 0):
        donors = sizes[labels] > 1
        p = int(np.argmax(np.where(donors, dist, -1.0)))
        sizes[labels[p]] -= 1
        sizes[c] = 1
        labels[p] = c
        dist[p] = 0.0


def kmeans(features, k: int, seed: int = 0, max_iter: int = MAX_ITER, tol: float = TOL) -> ClusteringResult:
    """Lloyd's algorithm on the rows of ``features``.

    Starts from ``k`` distinct rows drawn without replacement by
    ``numpy.random.default_rng(seed)``. Each iteration assigns rows to the
    nearest centroid (squared Euclidean, ties to the lowest cluster index),
    refills empty clusters, and moves centroids to member means. Stops once no
    centroid moves more than ``tol`` or after ``max_iter`` iterations.
    """
    x = _check_features(features, k)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    centroids = x[np.sort(rng.choice(n, size=k, replace=False))].copy()

    history = []
    for iteration in range(1, max_iter + 1):
        d = _sq_distances(x, centroids)
        labels = d.argmin(axis=1)
        dist = d[np.arange(n), labels]
        _repair_empty(labels, dist, k)
        history.append(float(dist.sum()))
        updated = _means(x, labels, k)
        shift = np.sqrt(((updated - centroids) ** 2).sum(axis=1)).max()
        centroids = updated
        if shift <= tol:
            break

    inertia = float(_sq_distances(x, centroids)[np.arange(n), labels].sum())
    db = None
    if k >= 2:
        try:
            db = _davies_bouldin(x, labels, k)
        except DegenerateClusteringError:
            pass
    return ClusteringResult(
        k=k,
        assignments=labels,
        centroids=centroids,
        db_index=db,
        seed=seed,
        iterations=iteration,
        inertia=inertia,
        inertia_history=tuple(history),
    )


def davies_bouldin(features, result: ClusteringResult) -> float:
    """Davies-Bouldin index of ``result`` over ``features`` (lower is better).

    Scatter is the mean Euclidean distance from members to their centroid;
    separation is the Euclidean distance between centroids. Centroids are
    recomputed as member means.
    """
    x = _check_features(features, result.k)
    labels = np.asarray(result.assignments)
    if labels.shape != (x.shape[0],):
        raise ValueError("assignments do not match the number of feature rows")
    return _davies_bouldin(x, labels, result.k)


def _davies_bouldin(x: np.ndarray, labels: np.ndarray, k: int) -> float:
    if k < 2:
        raise ValueError("Davies-Bouldin index needs k >= 2")
    sizes = np.bincount(labels, minlength=k)
    if sizes.size > k or (sizes == 0).any():
        raise DegenerateClusteringError("every cluster label in [0, k) needs at least one member")
    centroids = _means(x, labels, k)
    scatter = np.array([
        np.sqrt(((x[labels == c] - centroids[c]) ** 2).sum(axis=1)).mean()
        for c in range(k)
    ])
    gaps = np.sqrt(((centroids[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2))
    worst = np.empty(k)
    for i in range(k):
        ratios = []
        for j in range(k):
            if i == j:
                continue
            if gaps[i, j] == 0:
                raise DegenerateClusteringError(
                    f"centroids of clusters {min(i, j)} and {max(i, j)} coincide",
                    pair=(min(i, j), max(i, j)),
                )
            ratios.append((scatter[i] + scatter[j]) / gaps[i, j])
        worst[i] = max(ratios)
    return float(worst.mean())


def kmeans_best_of(
    features,
    k: int,
    restarts: int = RESTARTS,
    base_seed: int = 0,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
) -> ClusteringResult:
    """Run K-Means with seeds ``base_seed .. base_seed + restarts - 1``; keep the lowest DB index.

    Ties go to the earliest seed. Runs with an undefined index are skipped.
    With ``k == 1`` every run gives the same partition and the first is kept.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    x = _check_features(features, k)
    best = None
    scores = []
    for offset in range(restarts):
        run = kmeans(x, k, seed=base_seed + offset, max_iter=max_iter, tol=tol)
        scores.append((run.seed, run.db_index))
        if k == 1:
            if best is None:
                best = run
        elif run.db_index is not None and (best is None or run.db_index < best.db_index):
            best = run
    if best is None:
        raise DegenerateClusteringError(
            f"all {restarts} restarts with k={k} produced coincident centroids"
        )
    return replace(best, restart_scores=tuple(scores))


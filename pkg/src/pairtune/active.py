"""Cluster-based uncertainty sampling.

A query batch balances informativeness (small |decision value|) against
representativeness: the unlabeled pool is clustered into k = q*n groups,
each cluster is collapsed to its medoid, and the q medoids nearest the
decision boundary are queried.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pairs import PairSample


@dataclass(frozen=True)
class QueryConfig:
    q: int
    n: int
    kmeans_max_iter: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.q < 1 or self.n < 1:
            raise ValueError("q and n must be >= 1")
        if self.kmeans_max_iter < 1:
            raise ValueError("kmeans_max_iter must be >= 1")


def _nearest_sq_dist(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = (np.sum(points * points, axis=1)[:, None]
          + np.sum(centroids * centroids, axis=1)[None, :]
          - 2.0 * points @ centroids.T)
    np.maximum(d2, 0.0, out=d2)
    return np.argmin(d2, axis=1), d2


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining mass on duplicates of chosen points
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return points[chosen].copy()


def kmeans(points: np.ndarray, k: int, seed: int = 0,
           max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations from a k-means++ start, run to assignment fixpoint.

    Deterministic for a given seed.  Empty clusters are reseeded to the point
    farthest from its nearest centroid.  Returns (assignment, centroids).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a non-empty 2d array")
    if k > len(points):
        warnings.warn(f"k={k} clamped to {len(points)} points", stacklevel=2)
        k = len(points)
    if k < 1:
        raise ValueError("k must be >= 1")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(points, k, rng)
    assignment = np.full(len(points), -1, dtype=np.int64)
    for _ in range(max_iter):
        new_assignment, d2 = _nearest_sq_dist(points, centroids)
        nearest_d2 = d2[np.arange(len(points)), new_assignment]
        for c in range(k):
            members = new_assignment == c
            if members.any():
                centroids[c] = points[members].mean(axis=0)
            else:
                far = int(np.argmax(nearest_d2))
                centroids[c] = points[far]
                new_assignment[far] = c
                nearest_d2[far] = 0.0
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
    return assignment, centroids


def medoids(points: np.ndarray, assignment: np.ndarray,
            centroids: np.ndarray) -> list[int]:
    """Per cluster, the member nearest its centroid; ties take the lowest index."""
    points = np.asarray(points, dtype=np.float64)
    out = []
    for c in range(len(centroids)):
        members = np.flatnonzero(assignment == c)
        if len(members) == 0:
            raise ValueError(f"cluster {c} is empty")
        d2 = np.sum((points[members] - centroids[c]) ** 2, axis=1)
        out.append(int(members[np.argmin(d2)]))
    return out


def select_queries(model, unlabeled: Sequence[PairSample],
                   cfg: QueryConfig) -> list[PairSample]:
    """The q medoids (of k = q*n clusters) with the smallest |decision|.

    Ties on |decision| break by (left_id, right_id).  The result is shorter
    than q only when the pool itself is.
    """
    if not unlabeled:
        raise ValueError("nothing to query")
    X = np.asarray([p.features for p in unlabeled], dtype=np.float64)
    k = min(cfg.q * cfg.n, len(unlabeled))
    assignment, centroids = kmeans(X, k, seed=cfg.seed, max_iter=cfg.kmeans_max_iter)
    med = medoids(X, assignment, centroids)
    med = sorted(set(med))
    scores = np.abs(model.decision_many(X[med]))
    ranked = sorted(
        zip(scores, (unlabeled[i].left_id for i in med),
            (unlabeled[i].right_id for i in med), med),
        key=lambda r: (r[0], r[1], r[2]))
    return [unlabeled[i] for *_, i in ranked[:cfg.q]]

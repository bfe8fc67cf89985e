"""Seeded k-means with k-means++ seeding and restarts."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datamodel import ClusterAssignment, _frozen
from .errors import NonFiniteError, ParameterError, SizeError


@dataclass(frozen=True, eq=False)
class KMeansResult:
    assignment: ClusterAssignment
    centroids: np.ndarray
    inertia: float
    restarts_run: int
    n_iter: int = 0

    def __post_init__(self):
        object.__setattr__(self, "centroids", _frozen(self.centroids))

    @property
    def labels(self) -> np.ndarray:
        return self.assignment.labels


def _sq_dists(points, centroids):
    # explicit differences, not the expanded-norm trick: exact zeros for coincident points
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding of ``k`` centroids."""
    n = points.shape[0]
    idx = [int(rng.integers(n))]
    closest = ((points - points[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            nxt = int(rng.integers(n))
        idx.append(nxt)
        closest = np.minimum(closest, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[idx].copy()


def lloyd(points: np.ndarray, centroids: np.ndarray, max_iters: int, tol: float):
    """Run Lloyd iterations from ``centroids``.

    Returns ``(labels, centroids, inertia, n_iter, history)`` where ``history``
    holds the inertia after every assignment step.
    """
    k = centroids.shape[0]
    centroids = centroids.copy()
    history = []
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        d2 = _sq_dists(points, centroids)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(labels)), labels].sum()))
        new = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c]:
                new[c] = points[labels == c].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # re-seed each empty cluster at the point currently farthest from its centroid
            own = d2[np.arange(len(labels)), labels].copy()
            for c in empty:
                far = int(np.argmax(own))
                new[c] = points[far]
                own[far] = -1.0
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol and not empty.size:
            break
    d2 = _sq_dists(points, centroids)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(labels)), labels].sum())
    history.append(inertia)
    return labels, centroids, inertia, n_iter, history


def kmeans(
    points,
    k: int,
    restarts: int = 30,
    max_iters: int = 300,
    tol: float = 1e-9,
    seed: int = 0,
    workers: int = 1,
) -> KMeansResult:
    """Best-of-``restarts`` k-means on the rows of ``points``.

    Restart ``r`` draws its seeding from ``default_rng([seed, r])``, so the
    result is identical however many ``workers`` run the restarts. The winner
    is the lowest inertia, earliest restart on ties.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise SizeError("points must be a 2-D array of row vectors")
    n = points.shape[0]
    if k < 1:
        raise ParameterError(f"k must be positive, got {k}")
    if n < k:
        raise SizeError(f"need at least k={k} points, got {n}")
    if not np.all(np.isfinite(points)):
        raise NonFiniteError("non-finite points")
    if restarts < 1 or max_iters < 1:
        raise ParameterError("restarts and max_iters must be >= 1")

    def one(r):
        rng = np.random.default_rng([seed, r])
        init = kmeans_plusplus(points, k, rng)
        return lloyd(points, init, max_iters, tol)

    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(one, range(restarts)))
    else:
        runs = [one(r) for r in range(restarts)]
    best = min(range(restarts), key=lambda r: (runs[r][2], r))
    labels, centroids, inertia, n_iter, _ = runs[best]
    return KMeansResult(ClusterAssignment(labels, k), centroids, inertia, restarts, n_iter)

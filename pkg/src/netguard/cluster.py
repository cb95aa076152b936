"""Seeded k-means machinery shared by mixture initialization and selection baselines.

Plain Lloyd iterations over squared Euclidean distance, with optional
per-sample weights (uniform weights reduce exactly to standard k-means, so
weighted and unweighted callers share one code path and one random stream).
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError


def _sq_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances, clipped at 0 against roundoff."""
    d2 = (
        (x * x).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * x @ centers.T
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def kmeans_plus_plus(
    x: np.ndarray,
    k: int,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Choose k distinct seed indices, each with probability ~ weight * sq-dist.

    When the remaining probability mass is zero (duplicate points), falls back
    to a uniform draw over the indices not yet chosen.
    """
    n = x.shape[0]
    if k > n:
        raise ContractError(f"cannot seed {k} centers from {n} points")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)

    chosen = np.empty(k, dtype=np.int64)
    taken = np.zeros(n, dtype=bool)
    mass = w.copy()
    for j in range(k):
        total = mass.sum()
        if total > 0:
            idx = int(rng.choice(n, p=mass / total))
        else:
            remaining = np.flatnonzero(~taken)
            idx = int(remaining[rng.integers(remaining.size)])
        chosen[j] = idx
        taken[idx] = True
        d2 = _sq_distances(x, x[chosen[: j + 1]]).min(axis=1)
        mass = w * d2
        mass[taken] = 0.0
    return chosen


def weighted_kmeans(
    x: np.ndarray,
    k: int,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
    max_iters: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm from k-means++ seeds.

    Returns (centers (k, d), assignment (n,)). Empty clusters are re-seeded to
    the point currently farthest from its assigned center. Deterministic for a
    given generator state.
    """
    n = x.shape[0]
    if k > n:
        raise ContractError(f"cannot fit {k} clusters to {n} points")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)

    centers = x[kmeans_plus_plus(x, k, rng, weights=w)].copy()
    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iters):
        d2 = _sq_distances(x, centers)
        new_assign = d2.argmin(axis=1)

        # Re-seed any empty cluster to the farthest currently-assigned point.
        counts = np.bincount(new_assign, minlength=k)
        reseeded = np.zeros(n, dtype=bool)
        for j in np.flatnonzero(counts == 0):
            dist_to_own = d2[np.arange(n), new_assign].copy()
            dist_to_own[reseeded] = -np.inf
            far = int(dist_to_own.argmax())
            centers[j] = x[far]
            new_assign[far] = j
            reseeded[far] = True

        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = assign == j
            wm = w[members]
            total = wm.sum()
            if total > 0:
                centers[j] = (x[members] * wm[:, None]).sum(axis=0) / total
            elif members.any():
                centers[j] = x[members].mean(axis=0)
    return centers, assign

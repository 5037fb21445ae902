"""Client-side Lloyd steps: constrained assignment, local updates, reconstruction, folding."""

from __future__ import annotations

import math

import numpy as np
import numpy.typing as npt

from fastlloyd.config.models import PostProcessing
from fastlloyd.core.types import DISCARDED, CentroidState, Dataset, GlobalUpdate, LocalUpdate

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


def distances(points: FloatArray, centroids: FloatArray) -> FloatArray:
    """n x k Euclidean distances."""
    return np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)


def assign(points: Dataset, centroids: CentroidState, eta_t: float | None) -> IntArray:
    """Nearest centroid (lowest index on ties) if strictly closer than eta_t, else DISCARDED."""
    dist = distances(points.points, centroids.centroids)
    labels = np.argmin(dist, axis=1).astype(np.int64)
    if eta_t is not None and math.isfinite(eta_t):
        nearest = dist[np.arange(points.n), labels]
        labels[~(nearest < eta_t)] = DISCARDED
    return labels


def local_update(
    points: Dataset, labels: IntArray, centroids: CentroidState, relative: bool = True
) -> LocalUpdate:
    """Per-cluster sums of (x - previous centroid), or of x itself, and counts."""
    k, d = centroids.centroids.shape
    sums = np.zeros((k, d))
    counts = np.zeros(k)
    for j in range(k):
        members = points.points[labels == j]
        counts[j] = members.shape[0]
        if members.shape[0]:
            offset = centroids.centroids[j] if relative else 0.0
            sums[j] = np.sum(members - offset, axis=0)
    return LocalUpdate(sums=sums, counts=counts, relative=relative)


def fold(x: npt.ArrayLike, bound: float) -> FloatArray:
    """Fold out-of-range values into [-bound, bound]: y = (x + B) mod 2B, reflected when y > B.

    In-range values are returned unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.mod(x + bound, 2.0 * bound)
    y = np.where(y > bound, 2.0 * bound - y, y) - bound
    return np.where(np.abs(x) <= bound, x, y)


def truncate(x: npt.ArrayLike, bound: float) -> FloatArray:
    return np.clip(np.asarray(x, dtype=np.float64), -bound, bound)


def clip_displacement(new: FloatArray, prev: FloatArray, eta_t: float) -> FloatArray:
    """Rescale rows of new - prev longer than eta_t down to length eta_t."""
    disp = new - prev
    norms = np.linalg.norm(disp, axis=1, keepdims=True)
    scale = np.where(norms > eta_t, eta_t / np.where(norms > 0, norms, 1.0), 1.0)
    return prev + disp * scale


def post_process(
    centroids: FloatArray, bound: float, strategy: PostProcessing = PostProcessing.FOLD
) -> FloatArray:
    if strategy == PostProcessing.FOLD:
        return fold(centroids, bound)
    if strategy == PostProcessing.TRUNCATE:
        return truncate(centroids, bound)
    return np.asarray(centroids, dtype=np.float64)


def reconstruct_centroids(
    noisy: GlobalUpdate,
    prev: CentroidState,
    eta_t: float | None,
    bound: float = 1.0,
    count_floor: float = 1.0,
    clip: bool = True,
    strategy: PostProcessing = PostProcessing.FOLD,
) -> CentroidState:
    """New centroids from aggregated sums/counts: hold, shift, clip to eta_t, then fold."""
    previous = prev.centroids
    counts = noisy.counts.reshape(-1)
    live = counts > count_floor
    safe_counts = np.where(live, counts, 1.0)[:, None]

    if noisy.relative:
        step = np.where(live[:, None], noisy.sums / safe_counts, 0.0)
        updated = previous + step
    else:
        updated = np.where(live[:, None], noisy.sums / safe_counts, previous)

    if clip and eta_t is not None and math.isfinite(eta_t):
        updated = clip_displacement(updated, previous, eta_t)

    return CentroidState(
        centroids=post_process(updated, bound, strategy), iteration=prev.iteration + 1
    )

"""Domain types shared by every module: datasets, centroids and per-round updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from fastlloyd.core.exceptions import InvalidInputError

FloatArray = npt.NDArray[np.float64]

# A single d-dimensional point; datasets store points as rows of one matrix.
Point = FloatArray

DISCARDED = -1


def _frozen(array: npt.ArrayLike, ndim: int, name: str) -> FloatArray:
    out = np.array(array, dtype=np.float64, copy=True)
    if out.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Row-major n x d matrix of points."""

    points: FloatArray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        pts = _frozen(pts, 2, "points")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidInputError("dataset must hold at least one point of dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("dataset contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return self.n

    def subset(self, indices: npt.ArrayLike) -> Dataset:
        return Dataset(self.points[np.asarray(indices, dtype=np.int64)])


@dataclass(frozen=True)
class CentroidState:
    """Current (noisy) centroids, k x d, and the iteration that produced them."""

    centroids: FloatArray
    iteration: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "centroids", _frozen(self.centroids, 2, "centroids"))
        if self.iteration < 0:
            raise InvalidInputError("iteration must be >= 0")

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def d(self) -> int:
        return int(self.centroids.shape[1])


@dataclass(frozen=True)
class LocalUpdate:
    """One client's per-cluster sums (relative or absolute) and counts for a round."""

    sums: FloatArray
    counts: FloatArray
    relative: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "sums", _frozen(self.sums, 2, "sums"))
        object.__setattr__(self, "counts", _frozen(self.counts, 1, "counts"))
        if self.sums.shape[0] != self.counts.shape[0]:
            raise InvalidInputError("sums and counts disagree on the cluster count")


@dataclass(frozen=True)
class GlobalUpdate:
    """Aggregated (and possibly noised) sums and counts as decoded by a client."""

    sums: FloatArray
    counts: FloatArray
    relative: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "sums", _frozen(self.sums, 2, "sums"))
        object.__setattr__(self, "counts", _frozen(self.counts, 1, "counts"))

    @classmethod
    def from_local(cls, updates: list[LocalUpdate]) -> GlobalUpdate:
        """Plain (noise-free, unencoded) sum of local updates."""
        if not updates:
            raise InvalidInputError("at least one local update is required")
        sums = np.sum([u.sums for u in updates], axis=0)
        counts = np.sum([u.counts for u in updates], axis=0)
        return cls(sums=sums, counts=counts, relative=updates[0].relative)


@dataclass(frozen=True)
class AffineMap:
    """Per-dimension map from raw [low, high] onto [-bound, bound]; constant dims map to 0."""

    low: FloatArray
    high: FloatArray
    bound: float = 1.0

    @property
    def constant_dims(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.high <= self.low))

    def apply(self, points: npt.ArrayLike) -> FloatArray:
        pts = np.asarray(points, dtype=np.float64)
        span = self.high - self.low
        varying = span > 0
        scaled = (pts - self.low) / np.where(varying, span, 1.0) * (2.0 * self.bound) - self.bound
        return np.where(varying, scaled, 0.0)

    def invert(self, points: npt.ArrayLike) -> FloatArray:
        pts = np.asarray(points, dtype=np.float64)
        span = self.high - self.low
        raw = (pts + self.bound) / (2.0 * self.bound) * span + self.low
        return np.where(span > 0, raw, self.low)

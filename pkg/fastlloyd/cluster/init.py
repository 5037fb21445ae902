"""Data-independent sphere-packing initialization."""

from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt

from fastlloyd.config.models import ProtocolParams
from fastlloyd.core.rng import SeededRng, StreamKind
from fastlloyd.core.types import CentroidState

logger = logging.getLogger(__name__)

SEARCH_STEPS = 30
ATTEMPTS_PER_CENTROID = 100
PLACEMENT_RESTARTS = 10


def _place(
    k: int, d: int, bound: float, radius: float, gen: np.random.Generator
) -> npt.NDArray[np.float64] | None:
    """Rejection-sample k centers >= radius from the boundary and >= 2*radius apart."""
    half_width = max(bound - radius, 0.0)
    placed = np.empty((0, d))
    for _ in range(k):
        candidates = gen.uniform(-half_width, half_width, size=(ATTEMPTS_PER_CENTROID, d))
        if placed.shape[0]:
            gaps = np.linalg.norm(candidates[:, None, :] - placed[None, :, :], axis=2)
            feasible = np.flatnonzero(np.all(gaps >= 2.0 * radius, axis=1))
        else:
            feasible = np.array([0])
        if feasible.size == 0:
            return None
        placed = np.vstack([placed, candidates[feasible[0]]])
    return placed


def sphere_packing(
    k: int, d: int, bound: float, rng: SeededRng
) -> tuple[npt.NDArray[np.float64], float]:
    """Binary-search the largest packing radius that still places all k centers."""
    lo, hi = 0.0, bound
    best: npt.NDArray[np.float64] | None = None
    for step in range(SEARCH_STEPS):
        mid = (lo + hi) / 2.0
        found = None
        for restart in range(PLACEMENT_RESTARTS):
            found = _place(k, d, bound, mid, rng.generator(StreamKind.INIT, step, restart))
            if found is not None:
                break
        if found is None:
            hi = mid
        else:
            lo, best = mid, found
    if best is None:
        # Radius 0 imposes no constraint.
        best = _place(k, d, bound, 0.0, rng.generator(StreamKind.INIT, SEARCH_STEPS, 0))
    logger.debug("Sphere packing: k=%d d=%d radius=%.6f", k, d, lo)
    return best, lo


def sphere_packing_init(params: ProtocolParams, rng: SeededRng) -> CentroidState:
    centroids, _ = sphere_packing(params.k, params.d, params.bound, rng)
    return CentroidState(centroids=centroids, iteration=0)

"""Synthetic Gaussian cluster datasets with a separation knob and optional outliers."""

from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt

from fastlloyd.config.models import SizeRatio, SynthSpec
from fastlloyd.core.dataset import normalize_dataset
from fastlloyd.core.exceptions import InvalidInputError
from fastlloyd.core.rng import SeededRng, StreamKind
from fastlloyd.core.types import DISCARDED, Dataset

logger = logging.getLogger(__name__)

PLACEMENT_ATTEMPTS = 10_000
SHRINK_FACTOR = 0.9
MAX_SHRINKS = 50
MAX_OUTLIERS = 100
JITTER_RANGE = (0.7, 1.3)

# Outlier label in ground truth.
OUTLIER = DISCARDED


def cluster_sizes(
    total: int, k: int, ratio: SizeRatio, gen: np.random.Generator | None = None
) -> npt.NDArray[np.int64]:
    """Split ``total`` points over k clusters; rounding remainders go to the largest clusters."""
    if k < 1 or total < k:
        raise InvalidInputError(f"cannot split {total} points into {k} non-empty clusters")
    if ratio == SizeRatio.BALANCED:
        weights = np.ones(k)
    elif ratio == SizeRatio.LINEAR:
        weights = np.arange(1, k + 1, dtype=np.float64)
    else:
        gen = gen or np.random.default_rng(0)
        weights = gen.uniform(*JITTER_RANGE, size=k)
    sizes = np.floor(total * weights / weights.sum()).astype(np.int64)
    sizes = np.maximum(sizes, 1)
    order = np.argsort(-weights, kind="stable")
    i = 0
    while sizes.sum() < total:
        sizes[order[i % k]] += 1
        i += 1
    while sizes.sum() > total:
        j = order[i % k]
        if sizes[j] > 1:
            sizes[j] -= 1
        i += 1
    return sizes


def place_centers(
    k: int, d: int, radii: npt.NDArray[np.float64], separation: float, gen: np.random.Generator
) -> npt.NDArray[np.float64] | None:
    """Rejection-sample k centers in [-1, 1]^d with gaps >= (1 + separation)(r_i + r_j)."""
    centers = np.empty((k, d))
    for i in range(k):
        for _ in range(PLACEMENT_ATTEMPTS):
            candidate = gen.uniform(-1.0, 1.0, size=d)
            if i == 0:
                break
            gaps = np.linalg.norm(centers[:i] - candidate, axis=1)
            if np.all(gaps >= (1.0 + separation) * (radii[:i] + radii[i])):
                break
        else:
            return None
        centers[i] = candidate
    return centers


def generate_synth(spec: SynthSpec, bound: float = 1.0) -> tuple[Dataset, npt.NDArray[np.int64]]:
    """Isotropic Gaussian clusters plus uniform outliers, normalized onto [-bound, bound]^d.

    Returns the shuffled dataset and its ground-truth labels (outliers are labelled -1).
    """
    gen = SeededRng(spec.seed).generator(StreamKind.SYNTH, 0)
    outliers = spec.outliers
    if outliers is None:
        outliers = int(gen.integers(0, MAX_OUTLIERS + 1))
    clustered = spec.n - outliers
    if clustered < spec.k_true:
        raise InvalidInputError(
            f"n={spec.n} leaves {clustered} clustered points for {spec.k_true} clusters"
        )
    sizes = cluster_sizes(clustered, spec.k_true, spec.size_ratio, gen)

    radii = np.full(spec.k_true, spec.spread)
    for shrink in range(MAX_SHRINKS + 1):
        centers = place_centers(spec.k_true, spec.d, radii, spec.separation, gen)
        if centers is not None:
            break
        radii = radii * SHRINK_FACTOR
        logger.debug("Separation infeasible, shrinking cluster radii (retry %d)", shrink + 1)
    else:
        raise InvalidInputError(
            f"cannot place {spec.k_true} clusters with separation {spec.separation}"
        )

    blocks = [
        gen.normal(center, radius, size=(size, spec.d))
        for center, radius, size in zip(centers, radii, sizes)
    ]
    labels = [np.full(size, j, dtype=np.int64) for j, size in enumerate(sizes)]
    if outliers:
        blocks.append(gen.uniform(-1.0, 1.0, size=(outliers, spec.d)))
        labels.append(np.full(outliers, OUTLIER, dtype=np.int64))

    points = np.vstack(blocks)
    truth = np.concatenate(labels)
    order = gen.permutation(spec.n)
    normalized, _ = normalize_dataset(Dataset(points[order]), bound)
    logger.info(
        "Generated synth: n=%d k=%d d=%d outliers=%d sizes=%s",
        spec.n,
        spec.k_true,
        spec.d,
        outliers,
        sizes.tolist(),
    )
    return normalized, truth[order]


def generate_timesynth(n: int, k: int, d: int, seed: int = 0, bound: float = 1.0) -> Dataset:
    """Balanced clusters, no outliers."""
    spec = SynthSpec(n=n, k_true=k, d=d, size_ratio=SizeRatio.BALANCED, outliers=0, seed=seed)
    data, _ = generate_synth(spec, bound)
    return data

"""Dataset normalization and balanced partitioning across clients."""

from __future__ import annotations

import logging

import numpy as np

from fastlloyd.core.exceptions import InvalidInputError
from fastlloyd.core.rng import SeededRng, StreamKind
from fastlloyd.core.types import AffineMap, Dataset

logger = logging.getLogger(__name__)


def normalize_dataset(raw: Dataset, bound: float = 1.0) -> tuple[Dataset, AffineMap]:
    """Map each dimension's [min, max] onto [-bound, bound]; constant dimensions map to 0."""
    if raw is None or raw.n < 1:
        raise InvalidInputError("cannot normalize an empty dataset")
    if bound <= 0:
        raise InvalidInputError(f"bound must be positive, got {bound}")

    affine = AffineMap(
        low=raw.points.min(axis=0), high=raw.points.max(axis=0), bound=float(bound)
    )
    normalized = np.clip(affine.apply(raw.points), -bound, bound)
    if affine.constant_dims:
        logger.debug("Constant dimensions mapped to 0: %s", affine.constant_dims)
    return Dataset(normalized), affine


def partition_dataset(data: Dataset, clients: int, rng: SeededRng) -> list[Dataset]:
    """Randomly split ``data`` into ``clients`` shards whose sizes differ by at most one."""
    if clients < 1:
        raise InvalidInputError(f"client count must be >= 1, got {clients}")
    if clients > data.n:
        raise InvalidInputError(f"cannot split {data.n} points across {clients} clients")
    if clients == 1:
        return [data]

    order = rng.generator(StreamKind.PARTITION).permutation(data.n)
    return [data.subset(np.sort(chunk)) for chunk in np.array_split(order, clients)]

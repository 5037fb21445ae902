"""Label-addressable deterministic randomness shared by all parties."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import numpy.typing as npt

from fastlloyd.core.exceptions import InvalidInputError

_SEED_MODULUS = 2**64


class StreamKind(IntEnum):
    """Domain-separation tag for every stream derived from the shared seed."""

    INIT = 1
    PARTITION = 2
    MASK_R = 3
    MASK_C = 4
    SYNTH = 5
    SWEEP = 6


@dataclass(frozen=True)
class SeededRng:
    """Counter-mode generator keyed by (seed, kind, labels).

    Nothing is drawn sequentially from shared state: every call rebuilds the stream
    for its labels, so any party holding the seed regenerates the same words.
    """

    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", int(self.seed) % _SEED_MODULUS)

    def _bit_generator(self, kind: StreamKind, labels: tuple[int, ...]) -> np.random.Philox:
        if any(int(label) < 0 for label in labels):
            raise InvalidInputError(f"stream labels must be non-negative, got {labels}")
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(int(kind), *(int(label) for label in labels))
        )
        return np.random.Philox(sequence)

    def generator(self, kind: StreamKind, *labels: int) -> np.random.Generator:
        """A fresh numpy Generator for the labelled stream."""
        return np.random.Generator(self._bit_generator(kind, labels))

    def words(self, count: int, width: int, kind: StreamKind, *labels: int) -> npt.NDArray:
        """``count`` uniform ring words of ``width`` bits from the labelled stream."""
        raw = self._bit_generator(kind, labels).random_raw(int(count))
        raw = np.asarray(raw, dtype=np.uint64).reshape(-1)
        if width == 64:
            return raw
        if width == 32:
            return (raw & np.uint64(0xFFFFFFFF)).astype(np.uint32)
        raise InvalidInputError(f"unsupported ring width: {width}")

    def derive(self, offset: int) -> SeededRng:
        """Seed for run ``offset`` of a sweep (base seed + run index)."""
        return SeededRng(self.seed + int(offset))

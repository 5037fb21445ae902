"""One-time-pad mask sets regenerated by every client from the shared seed."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from fastlloyd.core.rng import SeededRng, StreamKind
from fastlloyd.ringcodec.codec import RingMatrix


class UpdateKind(IntEnum):
    """Which aggregated quantity a mask or message belongs to."""

    REL_SUMS = 0
    COUNTS = 1


_STREAMS = {UpdateKind.REL_SUMS: StreamKind.MASK_R, UpdateKind.COUNTS: StreamKind.MASK_C}


@dataclass(frozen=True)
class MaskSet:
    masks: tuple[RingMatrix, ...]
    total: RingMatrix

    def for_party(self, party: int) -> RingMatrix:
        return self.masks[party]

    def cancels(self) -> bool:
        """Sum of all masks minus the total is zero in the ring."""
        acc = RingMatrix.zeros(*self.total.shape, w=self.total.w, q=self.total.q)
        for mask in self.masks:
            acc = acc + mask
        return not np.any((acc - self.total).words)


def derive_masks(
    rng: SeededRng,
    round_index: int,
    kind: UpdateKind,
    clients: int,
    shape: tuple[int, int],
    w: int = 64,
    q: int = 16,
) -> MaskSet:
    """M uniform mask matrices for (round, kind), one stream per party, plus their wrapping sum."""
    rows, cols = shape
    masks = tuple(
        RingMatrix(
            rng.words(rows * cols, w, _STREAMS[kind], round_index, party).reshape(rows, cols),
            w=w,
            q=q,
        )
        for party in range(clients)
    )
    total = masks[0]
    for mask in masks[1:]:
        total = total + mask
    return MaskSet(masks=masks, total=total)

"""Client side of masked aggregation: mask, send, unmask."""

from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt

from fastlloyd.config.models import ProtocolParams
from fastlloyd.core.exceptions import ProtocolError, ProtocolViolationError
from fastlloyd.core.logging import protocol_context
from fastlloyd.core.rng import SeededRng
from fastlloyd.core.types import GlobalUpdate, LocalUpdate
from fastlloyd.msa.transport import Channel
from fastlloyd.msa.wire import MessageKind, MsaMessage, decode_message, encode_message
from fastlloyd.ringcodec.codec import decode, encode
from fastlloyd.ringcodec.masks import MaskSet, UpdateKind, derive_masks

logger = logging.getLogger(__name__)


def client_send(
    update: LocalUpdate,
    round_index: int,
    masks_sums: MaskSet,
    masks_counts: MaskSet,
    party: int,
    q: int = 16,
    w: int = 64,
) -> tuple[MsaMessage, MsaMessage]:
    """RelSums (k x d) and Counts (k x 1) messages, each encode(v) + m_party in the ring."""
    sums = encode(update.sums, q=q, w=w) + masks_sums.for_party(party)
    counts = encode(update.counts, q=q, w=w) + masks_counts.for_party(party)
    return (
        MsaMessage(round_index, MessageKind.REL_SUMS, sums),
        MsaMessage(round_index, MessageKind.COUNTS, counts),
    )


def client_receive(
    msg: MsaMessage, masks: MaskSet, expected_round: int
) -> npt.NDArray[np.float64]:
    """Subtract the mask total from a broadcast result and decode to reals."""
    if msg.kind != MessageKind.NOISED_RESULT:
        raise ProtocolViolationError(f"expected NOISED_RESULT, got {msg.kind.name}")
    if msg.round_index != expected_round:
        raise ProtocolViolationError(
            f"result for round {msg.round_index} arrived in round {expected_round}"
        )
    if msg.matrix.shape != masks.total.shape:
        raise ProtocolViolationError(
            f"result shape {msg.matrix.shape} does not match {masks.total.shape}"
        )
    return decode(msg.matrix - masks.total)


class MsaClient:
    """One party's view of GlobalMSA over a framed channel."""

    def __init__(
        self,
        channel: Channel,
        party: int,
        params: ProtocolParams,
        rng: SeededRng,
        round_timeout_s: float = 30.0,
    ):
        self.channel = channel
        self.party = party
        self.params = params
        self.rng = rng
        self.round_timeout_s = round_timeout_s
        self.payload_bytes_sent = 0
        self.payload_bytes_received = 0

    def _masks(self, round_index: int, kind: UpdateKind, shape: tuple[int, int]) -> MaskSet:
        masks = derive_masks(
            self.rng, round_index, kind, self.params.clients, shape, self.params.w, self.params.q
        )
        if logger.isEnabledFor(logging.DEBUG) and not masks.cancels():
            raise ProtocolError(f"mask set for round {round_index}/{kind.name} does not cancel")
        return masks

    def aggregate(self, update: LocalUpdate, round_index: int) -> GlobalUpdate:
        """Send this party's update and return the noised global aggregate."""
        k, d = update.sums.shape
        masks_sums = self._masks(round_index, UpdateKind.REL_SUMS, (k, d))
        masks_counts = self._masks(round_index, UpdateKind.COUNTS, (k, 1))
        outgoing = client_send(
            update, round_index, masks_sums, masks_counts, self.party, self.params.q, self.params.w
        )
        self.channel.send_frames([encode_message(msg) for msg in outgoing])
        self.payload_bytes_sent += sum(msg.payload_len for msg in outgoing)

        replies = [
            decode_message(self.channel.recv_frame(self.round_timeout_s), self.params.q)
            for _ in outgoing
        ]
        self.payload_bytes_received += sum(msg.payload_len for msg in replies)
        sums = client_receive(replies[0], masks_sums, round_index)
        counts = client_receive(replies[1], masks_counts, round_index).reshape(-1)
        logger.debug(
            "Decoded aggregate", extra=protocol_context("client", self.party, round_index)
        )
        return GlobalUpdate(sums=sums, counts=counts, relative=update.relative)

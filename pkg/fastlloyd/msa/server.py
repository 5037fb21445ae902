"""Aggregation server: wrapping sum of masked words plus quantized DP noise.

The server only ever sees masked words and its own noise draw. It has no access to
the shared seed or to any mask.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from fastlloyd.core.exceptions import InvalidInputError, ProtocolViolationError
from fastlloyd.core.logging import protocol_context
from fastlloyd.msa.transport import Channel
from fastlloyd.msa.wire import MessageKind, MsaMessage, decode_message, encode_message
from fastlloyd.ringcodec.codec import quantize_noise

logger = logging.getLogger(__name__)

_INPUT_KINDS = (MessageKind.REL_SUMS, MessageKind.COUNTS)


@dataclass(frozen=True)
class NoiseSpec:
    """What the server adds to one round's aggregates."""

    distribution: str  # gaussian, laplace or none
    scale_sums: float
    scale_counts: float

    @property
    def silent(self) -> bool:
        return self.distribution == "none" or (self.scale_sums == 0 and self.scale_counts == 0)


def draw_noise(
    rng: np.random.Generator, distribution: str, scale: float, shape: tuple[int, int]
) -> npt.NDArray[np.float64]:
    """Real-valued noise for one aggregate; zero scale draws nothing from ``rng``."""
    if distribution == "none" or scale == 0:
        return np.zeros(shape)
    if scale < 0:
        raise InvalidInputError(f"noise scale must be >= 0, got {scale}")
    if distribution == "gaussian":
        return rng.normal(0.0, scale, size=shape)
    if distribution == "laplace":
        return rng.laplace(0.0, scale, size=shape)
    raise InvalidInputError(f"unknown noise distribution: {distribution}")


def server_aggregate(
    msgs: Sequence[MsaMessage],
    std: float,
    rng: np.random.Generator,
    distribution: str = "gaussian",
) -> MsaMessage:
    """Wrapping element-wise sum of M masked matrices plus quantized noise."""
    if not msgs:
        raise ProtocolViolationError("no messages to aggregate")
    first = msgs[0]
    for msg in msgs[1:]:
        if (msg.round_index, msg.kind) != (first.round_index, first.kind):
            raise ProtocolViolationError(
                f"mixed messages: round {msg.round_index}/{msg.kind.name} "
                f"vs {first.round_index}/{first.kind.name}"
            )
        if msg.matrix.shape != first.matrix.shape or msg.width != first.width:
            raise ProtocolViolationError(
                f"shape mismatch in round {first.round_index}: "
                f"{msg.matrix.shape}/w={msg.width} vs {first.matrix.shape}/w={first.width}"
            )
    total = first.matrix
    for msg in msgs[1:]:
        total = total + msg.matrix
    gamma = draw_noise(rng, distribution, std, first.matrix.shape)
    noised = total + quantize_noise(gamma, q=first.matrix.q, w=first.matrix.w)
    return MsaMessage(first.round_index, MessageKind.NOISED_RESULT, noised)


@dataclass
class RoundState:
    """Masked inputs collected for one round, keyed by kind."""

    round_index: int
    expected: int
    width: int
    shape: tuple[int, int] | None = None  # (k, d) of the relative sums
    received: dict[MessageKind, list[MsaMessage]] = field(default_factory=dict)

    def add(self, msg: MsaMessage) -> None:
        if msg.round_index != self.round_index:
            raise ProtocolViolationError(
                f"expected round {self.round_index}, got {msg.round_index}"
            )
        if msg.kind not in _INPUT_KINDS:
            raise ProtocolViolationError(f"clients may not send {msg.kind.name}")
        if msg.width != self.width:
            raise ProtocolViolationError(f"expected {self.width}-bit words, got {msg.width}")
        if self.shape is not None:
            k, d = self.shape
            want = (k, d) if msg.kind is MessageKind.REL_SUMS else (k, 1)
            if msg.matrix.shape != want:
                raise ProtocolViolationError(
                    f"{msg.kind.name} shape {msg.matrix.shape} does not match the planned {want}"
                )
        bucket = self.received.setdefault(msg.kind, [])
        if len(bucket) >= self.expected:
            raise ProtocolViolationError(
                f"too many {msg.kind.name} messages in round {msg.round_index}"
            )
        bucket.append(msg)

    @property
    def complete(self) -> bool:
        return all(len(self.received.get(kind, ())) == self.expected for kind in _INPUT_KINDS)


@dataclass
class ServerStats:
    rounds: int = 0
    payload_bytes_received: int = 0
    payload_bytes_sent: int = 0
    round_ms: list[float] = field(default_factory=list)


class AggregationServer:
    """Runs T rounds against M connected clients with a barrier per round."""

    def __init__(
        self,
        channels: Sequence[Channel],
        noise_schedule: Sequence[NoiseSpec],
        q: int,
        w: int,
        *,
        shape: tuple[int, int],
        round_timeout_s: float = 30.0,
        noise_seed: int | None = None,
        record_transcript: bool = False,
    ):
        self.channels = list(channels)
        self.noise_schedule = list(noise_schedule)
        self.q = q
        self.w = w
        self.shape = shape
        self.round_timeout_s = round_timeout_s
        self.rng = np.random.default_rng(noise_seed)
        self.record_transcript = record_transcript
        self.transcript: list[MsaMessage] = []
        self.stats = ServerStats()

    def _collect(self, round_index: int) -> RoundState:
        state = RoundState(
            round_index, expected=len(self.channels), width=self.w, shape=self.shape
        )
        deadline = time.monotonic() + self.round_timeout_s
        for channel in self.channels:
            for _ in _INPUT_KINDS:
                remaining = max(0.0, deadline - time.monotonic())
                msg = decode_message(channel.recv_frame(remaining), self.q)
                state.add(msg)
                self.stats.payload_bytes_received += msg.payload_len
                if self.record_transcript:
                    self.transcript.append(msg)
        if not state.complete:
            raise ProtocolViolationError(f"round {round_index} is missing inputs of one kind")
        return state

    def run_round(self, round_index: int) -> None:
        started = time.perf_counter()
        spec = self.noise_schedule[round_index]
        state = self._collect(round_index)
        sums = state.received[MessageKind.REL_SUMS]
        counts = state.received[MessageKind.COUNTS]
        results = [
            server_aggregate(sums, spec.scale_sums, self.rng, spec.distribution),
            server_aggregate(counts, spec.scale_counts, self.rng, spec.distribution),
        ]
        bodies = [encode_message(msg) for msg in results]
        for channel in self.channels:
            channel.send_frames(bodies)
            self.stats.payload_bytes_sent += sum(msg.payload_len for msg in results)
        self.stats.rounds += 1
        self.stats.round_ms.append((time.perf_counter() - started) * 1000.0)
        logger.debug(
            "Aggregated %d clients",
            len(self.channels),
            extra=protocol_context("server", round_index=round_index),
        )

    def run(self) -> ServerStats:
        noised = sum(not spec.silent for spec in self.noise_schedule)
        logger.info(
            "Server running %d rounds (%d noised) for %d clients",
            len(self.noise_schedule),
            noised,
            len(self.channels),
        )
        try:
            for round_index in range(len(self.noise_schedule)):
                self.run_round(round_index)
        except Exception as exc:
            logger.error("Server aborted: %s", exc, extra=protocol_context("server"))
            self.close()
            raise
        return self.stats

    def close(self) -> None:
        for channel in self.channels:
            channel.close()

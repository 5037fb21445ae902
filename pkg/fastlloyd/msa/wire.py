"""Versioned binary messages and u32 length-prefix framing."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from fastlloyd.core.exceptions import ProtocolViolationError
from fastlloyd.ringcodec.codec import RingMatrix

MAGIC = b"FLMA"
VERSION = 1

# magic, version, round, kind, rows, cols, width
_HEADER = struct.Struct("<4sBIBHHB")
HEADER_LEN = _HEADER.size
_LENGTH = struct.Struct("<I")
PREFIX_LEN = _LENGTH.size

MAX_FRAME = 64 * 1024 * 1024


class MessageKind(IntEnum):
    REL_SUMS = 0
    COUNTS = 1
    NOISED_RESULT = 2


@dataclass(frozen=True)
class MsaMessage:
    round_index: int
    kind: MessageKind
    matrix: RingMatrix

    @property
    def rows(self) -> int:
        return self.matrix.rows

    @property
    def cols(self) -> int:
        return self.matrix.cols

    @property
    def width(self) -> int:
        return self.matrix.w

    @property
    def payload_len(self) -> int:
        return self.rows * self.cols * self.width // 8


def encode_message(message: MsaMessage) -> bytes:
    if not 0 <= message.round_index <= 0xFFFFFFFF:
        raise ProtocolViolationError(f"round out of range: {message.round_index}")
    if message.rows > 0xFFFF or message.cols > 0xFFFF:
        raise ProtocolViolationError(f"matrix too large for the wire: {message.matrix.shape}")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        message.round_index,
        int(message.kind),
        message.rows,
        message.cols,
        message.width,
    )
    return header + message.matrix.to_bytes()


def decode_message(data: bytes, q: int) -> MsaMessage:
    """Parse one message; ``q`` is not on the wire and comes from the run parameters."""
    if len(data) < HEADER_LEN:
        raise ProtocolViolationError("message shorter than header")
    magic, version, round_index, kind, rows, cols, width = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ProtocolViolationError(f"invalid magic: {magic!r}")
    if version != VERSION:
        raise ProtocolViolationError(f"unsupported version: {version}")
    try:
        decoded_kind = MessageKind(kind)
    except ValueError as exc:
        raise ProtocolViolationError(f"unknown message kind: {kind}") from exc
    if width not in (32, 64):
        raise ProtocolViolationError(f"unsupported word width: {width}")
    payload = data[HEADER_LEN:]
    expected = rows * cols * width // 8
    if len(payload) != expected:
        raise ProtocolViolationError(
            f"payload is {len(payload)} bytes, header declares {rows}x{cols}x{width} = {expected}"
        )
    matrix = RingMatrix.from_bytes(payload, rows, cols, w=width, q=q)
    return MsaMessage(round_index=round_index, kind=decoded_kind, matrix=matrix)


def frame(body: bytes) -> bytes:
    if len(body) > MAX_FRAME:
        raise ProtocolViolationError(f"frame of {len(body)} bytes exceeds {MAX_FRAME}")
    return _LENGTH.pack(len(body)) + body


def frame_length(prefix: bytes) -> int:
    (length,) = _LENGTH.unpack(prefix)
    if length > MAX_FRAME:
        raise ProtocolViolationError(f"declared frame of {length} bytes exceeds {MAX_FRAME}")
    return length

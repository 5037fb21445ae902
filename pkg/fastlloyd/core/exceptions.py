"""FastLloyd exception hierarchy for precise error handling."""

from __future__ import annotations


class FastLloydError(Exception):
    """Base exception for all FastLloyd errors."""


class InvalidInputError(FastLloydError, ValueError):
    """An operation received input outside its domain."""


class ConfigurationError(FastLloydError):
    """Invalid or missing configuration."""


class RingOverflowError(FastLloydError, OverflowError):
    """A value does not fit the signed range of the fixed-point ring."""

    def __init__(self, message: str, index: tuple[int, ...] | None = None):
        super().__init__(message)
        self.index = index


class ProtocolError(FastLloydError):
    """Base class for aggregation protocol failures."""


class ProtocolViolationError(ProtocolError):
    """A peer sent a message that does not fit the current round (shape, round, kind, framing)."""


class RoundTimeoutError(ProtocolError):
    """A round did not complete before its deadline (missing client or server reply)."""


class TransportError(FastLloydError):
    """A connection could not be established or broke mid-run."""

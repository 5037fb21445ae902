"""Fixed-point encoding into Z_{2^w} with wrapping arithmetic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from fastlloyd.core.exceptions import InvalidInputError, RingOverflowError

_WORD = {32: (np.uint32, np.int32), 64: (np.uint64, np.int64)}


def word_types(width: int) -> tuple[type, type]:
    try:
        return _WORD[width]
    except KeyError:
        raise InvalidInputError(f"unsupported ring width: {width}") from None


def round_half_away(values: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Nearest integer, ties away from zero."""
    v = np.asarray(values, dtype=np.float64)
    whole = np.trunc(v)
    # v - trunc(v) is exact, so the tie test sees the true fraction.
    with np.errstate(invalid="ignore"):
        tie_or_above = np.abs(v - whole) >= 0.5
    return np.where(tie_or_above, whole + np.copysign(1.0, v), whole)


@dataclass(frozen=True)
class RingMatrix:
    """Matrix of w-bit words read as two's-complement fixed-point values with q fraction bits."""

    words: npt.NDArray
    w: int = 64
    q: int = 16

    def __post_init__(self) -> None:
        unsigned, _ = word_types(self.w)
        words = np.asarray(self.words)
        if words.dtype != unsigned:
            raise InvalidInputError(f"ring words must be {np.dtype(unsigned)}, got {words.dtype}")
        if words.ndim < 2:
            words = words.reshape(-1, 1)
        object.__setattr__(self, "words", words)

    @property
    def rows(self) -> int:
        return int(self.words.shape[0])

    @property
    def cols(self) -> int:
        return int(self.words.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @classmethod
    def zeros(cls, rows: int, cols: int, w: int = 64, q: int = 16) -> RingMatrix:
        unsigned, _ = word_types(w)
        return cls(np.zeros((rows, cols), dtype=unsigned), w=w, q=q)

    def _check(self, other: RingMatrix) -> None:
        if (self.w, self.q) != (other.w, other.q) or self.shape != other.shape:
            raise InvalidInputError(
                f"ring operands differ: {self.shape}/w={self.w}/q={self.q} "
                f"vs {other.shape}/w={other.w}/q={other.q}"
            )

    def __add__(self, other: RingMatrix) -> RingMatrix:
        self._check(other)
        return RingMatrix(self.words + other.words, w=self.w, q=self.q)

    def __sub__(self, other: RingMatrix) -> RingMatrix:
        self._check(other)
        return RingMatrix(self.words - other.words, w=self.w, q=self.q)

    def signed(self) -> npt.NDArray:
        _, signed = word_types(self.w)
        return self.words.view(signed)

    def to_bytes(self) -> bytes:
        """Little-endian, row-major, no padding."""
        return self.words.astype(self.words.dtype.newbyteorder("<"), copy=False).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, rows: int, cols: int, w: int, q: int) -> RingMatrix:
        unsigned, _ = word_types(w)
        words = np.frombuffer(data, dtype=np.dtype(unsigned).newbyteorder("<"), count=rows * cols)
        return cls(words.astype(unsigned).reshape(rows, cols), w=w, q=q)


def _to_words(integers: npt.NDArray[np.float64], w: int) -> npt.NDArray:
    unsigned, signed = word_types(w)
    return integers.astype(signed).view(unsigned)


def encode(values: npt.ArrayLike, q: int = 16, w: int = 64) -> RingMatrix:
    """round(v * 2^q), ties away from zero, as w-bit two's-complement words."""
    word_types(w)
    v = np.asarray(values, dtype=np.float64)
    if v.ndim < 2:
        v = v.reshape(-1, 1)
    scaled = round_half_away(np.ldexp(v, q))
    limit = 2.0 ** (w - 1)
    bad = ~(np.abs(scaled) < limit)
    if bad.any():
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        raise RingOverflowError(
            f"value {v[index]!r} at index {index} does not fit Z_2^{w} with q={q}", index=index
        )
    return RingMatrix(_to_words(scaled, w), w=w, q=q)


def decode(matrix: RingMatrix) -> npt.NDArray[np.float64]:
    """Signed words divided by 2^q."""
    return np.ldexp(matrix.signed().astype(np.float64), -matrix.q)


def quantize_noise(gamma: npt.ArrayLike, q: int = 16, w: int = 64) -> RingMatrix:
    """Quantize a server noise draw onto the same 2^-q grid as the data."""
    return encode(gamma, q=q, w=w)

"""Bit-exact bit I/O and exponential-Golomb codes.

Bit order is MSB-first within each byte. Zero padding to a byte boundary
happens only through explicit byte_align() calls at unit boundaries, so a
stream is a deterministic function of the write calls that produced it.
"""

from __future__ import annotations


class StreamError(Exception):
    """Malformed or truncated bitstream."""


class BitWriter:
    """Accumulates bits MSB-first into a growing byte buffer."""

    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0  # pending bits, right-aligned
        self._nacc = 0  # number of pending bits, 0..7

    @property
    def bit_position(self) -> int:
        return len(self._buf) * 8 + self._nacc

    def write_bits(self, value: int, n: int) -> None:
        """Write the n low bits of value, most significant first."""
        if not 0 <= n <= 32:
            raise ValueError(f"bit count out of range: {n}")
        if value < 0 or (n < 32 and value >> n) or value >> 32:
            raise ValueError(f"value {value} does not fit in {n} bits")
        acc = (self._acc << n) | value
        nacc = self._nacc + n
        while nacc >= 8:
            nacc -= 8
            self._buf.append((acc >> nacc) & 0xFF)
        self._acc = acc & ((1 << nacc) - 1)
        self._nacc = nacc

    def byte_align(self) -> int:
        """Pad with zero bits to the next byte boundary; returns bits added."""
        pad = (-self._nacc) % 8
        if pad:
            self.write_bits(0, pad)
        return pad

    def write_bytes(self, data: bytes) -> None:
        """Append raw bytes; the writer must be byte-aligned."""
        if self._nacc:
            raise StreamError("writer not byte-aligned")
        self._buf.extend(data)

    def to_bytes(self) -> bytes:
        """Current contents; a trailing partial byte is zero-padded in the copy."""
        out = bytearray(self._buf)
        if self._nacc:
            out.append((self._acc << (8 - self._nacc)) & 0xFF)
        return bytes(out)


class BitReader:
    """Reads bits MSB-first from a byte buffer; reading past the end raises."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._nbits = len(data) * 8
        self._pos = 0

    @property
    def bit_position(self) -> int:
        return self._pos

    @property
    def bits_remaining(self) -> int:
        return self._nbits - self._pos

    def read_bits(self, n: int) -> int:
        if not 0 <= n <= 32:
            raise ValueError(f"bit count out of range: {n}")
        pos = self._pos
        if pos + n > self._nbits:
            raise StreamError("read past end of stream")
        value = 0
        took = 0
        data = self._data
        while took < n:
            byte = data[pos >> 3]
            avail = 8 - (pos & 7)
            take = min(avail, n - took)
            value = (value << take) | ((byte >> (avail - take)) & ((1 << take) - 1))
            pos += take
            took += take
        self._pos = pos
        return value

    def byte_align(self) -> int:
        """Skip to the next byte boundary; returns bits skipped."""
        pad = (-self._pos) % 8
        if pad:
            self.read_bits(pad)
        return pad

    def read_bytes(self, n: int) -> bytes:
        """Read raw bytes; the reader must be byte-aligned."""
        if self._pos & 7:
            raise StreamError("reader not byte-aligned")
        if n < 0 or self._pos + 8 * n > self._nbits:
            raise StreamError("read past end of stream")
        start = self._pos >> 3
        self._pos += 8 * n
        return bytes(self._data[start:start + n])


# Exp-Golomb codes. An unsigned value v maps to the codeword for v + 1:
# (bitlength - 1) zero bits, then the value itself including its leading 1.
# A prefix of 32 or more zeros cannot come from a valid encoder.

_UE_MAX = 0xFFFFFFFE


def ue_length(v: int) -> int:
    """Coded length in bits of ue(v)."""
    if v < 0 or v > _UE_MAX:
        raise ValueError(f"ue value out of range: {v}")
    return 2 * (v + 1).bit_length() - 1


def ue_encode(w: BitWriter, v: int) -> None:
    if v < 0 or v > _UE_MAX:
        raise ValueError(f"ue value out of range: {v}")
    code = v + 1
    k = code.bit_length()
    w.write_bits(0, k - 1)
    w.write_bits(code, k)


def ue_decode(r: BitReader) -> int:
    zeros = 0
    while r.read_bits(1) == 0:
        zeros += 1
        if zeros >= 32:
            raise StreamError("malformed exp-Golomb prefix")
    rest = r.read_bits(zeros) if zeros else 0
    return ((1 << zeros) | rest) - 1


def _se_to_ue(v: int) -> int:
    # 0 -> 0, positive v -> 2v - 1, negative v -> -2v
    if v > 0:
        return 2 * v - 1
    return -2 * v


def se_length(v: int) -> int:
    """Coded length in bits of se(v)."""
    return ue_length(_se_to_ue(v))


def se_encode(w: BitWriter, v: int) -> None:
    ue_encode(w, _se_to_ue(v))


def se_decode(r: BitReader) -> int:
    code = ue_decode(r)
    if code & 1:
        return (code + 1) >> 1
    return -(code >> 1)

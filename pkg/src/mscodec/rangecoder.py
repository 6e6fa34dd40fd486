"""Adaptive binary range coder (carry-less, byte oriented).

Probabilities are 11-bit counts of the zero symbol, adapted by shift-5
exponential decay.  The encoder emits a leading zero byte and a 5-byte flush,
mirrored by the decoder, so a valid stream never reads past its end; a
truncated stream raises :class:`DecodeError`.
"""

from __future__ import annotations

from .errors import DecodeError

PROB_BITS = 11
PROB_ONE = 1 << PROB_BITS
PROB_INIT = PROB_ONE // 2
ADAPT_SHIFT = 5

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


def new_contexts(count: int) -> list[int]:
    """Fresh probability states, all at the symmetric initial value."""
    return [PROB_INIT] * count


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def _shift_low(self):
        if self.low < 0xFF000000 or self.low > _MASK32:
            carry = self.low >> 32
            self.out.append((self.cache + carry) & 0xFF)
            self.out.extend(((0xFF + carry) & 0xFF,) * (self.cache_size - 1))
            self.cache_size = 0
            self.cache = (self.low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (self.low << 8) & _MASK32

    def encode_bit(self, probs: list[int], ctx: int, bit: int):
        p = probs[ctx]
        bound = (self.range >> PROB_BITS) * p
        if bit:
            self.low += bound
            self.range -= bound
            probs[ctx] = p - (p >> ADAPT_SHIFT)
        else:
            self.range = bound
            probs[ctx] = p + ((PROB_ONE - p) >> ADAPT_SHIFT)
        while self.range < _TOP:
            self.range = (self.range << 8) & _MASK32
            self._shift_low()

    def encode_bypass(self, bit: int):
        self.range >>= 1
        if bit:
            self.low += self.range
        while self.range < _TOP:
            self.range = (self.range << 8) & _MASK32
            self._shift_low()

    def encode_bypass_bits(self, value: int, count: int):
        for shift in range(count - 1, -1, -1):
            self.encode_bypass((value >> shift) & 1)

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 1  # leading byte is always zero padding from the encoder
        if len(data) < 5:
            raise DecodeError("range-coded payload shorter than 5 bytes")
        self.range = _MASK32
        self.code = 0
        for _ in range(4):
            self.code = ((self.code << 8) | self._next_byte()) & _MASK32

    def _next_byte(self) -> int:
        if self.pos >= len(self.data):
            raise DecodeError("range-coded payload truncated")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def decode_bit(self, probs: list[int], ctx: int) -> int:
        p = probs[ctx]
        bound = (self.range >> PROB_BITS) * p
        if self.code < bound:
            bit = 0
            self.range = bound
            probs[ctx] = p + ((PROB_ONE - p) >> ADAPT_SHIFT)
        else:
            bit = 1
            self.code -= bound
            self.range -= bound
            probs[ctx] = p - (p >> ADAPT_SHIFT)
        while self.range < _TOP:
            self.range = (self.range << 8) & _MASK32
            self.code = ((self.code << 8) | self._next_byte()) & _MASK32
        return bit

    def decode_bypass(self) -> int:
        self.range >>= 1
        if self.code >= self.range:
            self.code -= self.range
            bit = 1
        else:
            bit = 0
        while self.range < _TOP:
            self.range = (self.range << 8) & _MASK32
            self.code = ((self.code << 8) | self._next_byte()) & _MASK32
        return bit

    def decode_bypass_bits(self, count: int) -> int:
        value = 0
        for _ in range(count):
            value = (value << 1) | self.decode_bypass()
        return value

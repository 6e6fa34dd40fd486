import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mscodec.errors import DecodeError
from mscodec.rangecoder import RangeDecoder, RangeEncoder, new_contexts


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 1)), max_size=400))
def test_adaptive_roundtrip(seq):
    enc = RangeEncoder()
    probs = new_contexts(4)
    for ctx, bit in seq:
        enc.encode_bit(probs, ctx, bit)
    data = enc.finish()

    dec = RangeDecoder(data)
    probs = new_contexts(4)
    assert [dec.decode_bit(probs, ctx) for ctx, _ in seq] == [b for _, b in seq]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=300))
def test_bypass_roundtrip(bits):
    enc = RangeEncoder()
    for b in bits:
        enc.encode_bypass(b)
    data = enc.finish()
    dec = RangeDecoder(data)
    assert [dec.decode_bypass() for _ in bits] == bits


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 255), st.integers(1, 8)), max_size=60))
def test_bypass_words_roundtrip(words):
    enc = RangeEncoder()
    for value, width in words:
        enc.encode_bypass_bits(value & ((1 << width) - 1), width)
    data = enc.finish()
    dec = RangeDecoder(data)
    for value, width in words:
        assert dec.decode_bypass_bits(width) == value & ((1 << width) - 1)


def test_mixed_roundtrip_deterministic():
    def run():
        enc = RangeEncoder()
        probs = new_contexts(2)
        for i in range(1000):
            enc.encode_bit(probs, i % 2, (i * 7) % 3 == 0)
            if i % 5 == 0:
                enc.encode_bypass(i % 2)
        return enc.finish()

    assert run() == run()


def test_biased_stream_compresses():
    enc = RangeEncoder()
    probs = new_contexts(1)
    n = 4000
    for i in range(n):
        enc.encode_bit(probs, 0, 1 if i % 16 == 0 else 0)
    data = enc.finish()
    assert len(data) * 8 < n / 2  # far below 1 bit per symbol


def test_empty_payload_rejected():
    with pytest.raises(DecodeError):
        RangeDecoder(b"")


def test_truncated_payload_rejected():
    enc = RangeEncoder()
    probs = new_contexts(1)
    for i in range(5000):
        enc.encode_bit(probs, 0, i % 2)
    data = enc.finish()

    dec = RangeDecoder(data[: len(data) // 4])
    probs = new_contexts(1)
    with pytest.raises(DecodeError):
        for _ in range(5000):
            dec.decode_bit(probs, 0)

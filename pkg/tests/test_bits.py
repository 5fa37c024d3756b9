import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffstego.bits import (
    SegmentSpec,
    bits_from_bytes,
    bits_to_index,
    bytes_from_bits,
    frame_payload,
    index_to_bits,
    segment,
    unframe_payload,
    unsegment,
)
from diffstego.errors import (
    BadSegmentSpec,
    BitCountOverflow,
    TruncatedFrame,
    ValueOverflow,
    WidthOverflow,
)

bitstrings = st.text(alphabet="01", max_size=300)


@pytest.mark.parametrize("payload, count, expected", [
    (b"\xa0", 4, "1010"),
    (b"", 0, ""),
    (b"\xff\x00", 12, "111111110000"),
])
def test_bits_from_bytes(payload, count, expected):
    assert bits_from_bytes(payload, count) == expected


def test_bits_from_bytes_overflow():
    with pytest.raises(BitCountOverflow):
        bits_from_bytes(b"\x01", 9)


def test_bytes_roundtrip():
    data = bytes(range(256))
    assert bytes_from_bits(bits_from_bytes(data)) == data


def test_frame_examples():
    assert frame_payload("") == "0" * 32
    assert frame_payload("1") == "0" * 31 + "1" + "1"


def test_unframe_examples():
    assert unframe_payload("0" * 32 + "101") == ""
    with pytest.raises(TruncatedFrame):
        unframe_payload(format(10, "032b") + "10101")
    with pytest.raises(TruncatedFrame):
        unframe_payload("0" * 31)


def test_frame_roundtrip_random_payloads():
    rnd = random.Random(0)
    for _ in range(1000):
        x = "".join(rnd.choice("01") for _ in range(rnd.randrange(0, 400)))
        padding = "".join(rnd.choice("01") for _ in range(rnd.randrange(0, 20)))
        assert unframe_payload(frame_payload(x) + padding) == x


def test_segment_examples():
    spec = SegmentSpec(1024, 1024)
    segs, pad = segment("1" * 20, spec)
    assert (len(segs), pad) == (1, 0)
    segs, pad = segment("1" * 21, spec)
    assert (len(segs), pad) == (2, 19)
    assert segment("", spec) == ([], 0)


def test_segment_fields():
    segs, _ = segment("1000010110" + "0000000010", SegmentSpec(1024, 1024))
    assert segs[0].m_p_block == "1000010110"
    assert segs[0].m_b_block == "0000000010"
    assert segs[0].index == 0


@given(bitstrings, st.integers(1, 6), st.integers(1, 6))
def test_segment_unsegment_roundtrip(bits, wp, wb):
    spec = SegmentSpec(1 << wp, 1 << wb)
    segs, pad = segment(bits, spec)
    assert all(len(s.m_p_block) == wp and len(s.m_b_block) == wb for s in segs)
    assert [s.index for s in segs] == list(range(len(segs)))
    assert unsegment(segs, pad) == bits


@pytest.mark.parametrize("p_c, k", [(3, 4), (4, 1), (0, 8), (1024, 6)])
def test_bad_spec(p_c, k):
    with pytest.raises(BadSegmentSpec):
        SegmentSpec(p_c, k)


def test_index_examples():
    assert bits_to_index("1000010110") == 534
    assert bits_to_index("0000000010") == 2
    assert bits_to_index("0000000000") == 0
    assert index_to_bits(534, 10) == "1000010110"
    assert index_to_bits(0, 10) == "0000000000"


def test_index_errors():
    with pytest.raises(WidthOverflow):
        bits_to_index("1" * 65)
    with pytest.raises(ValueOverflow):
        index_to_bits(1024, 10)
    with pytest.raises(ValueOverflow):
        index_to_bits(-1, 4)


def test_index_roundtrip_exhaustive():
    for w in range(1, 17):
        for v in range(1 << w):
            assert bits_to_index(index_to_bits(v, w)) == v


@given(st.integers(0, 2**64 - 1))
def test_index_roundtrip_64(v):
    assert bits_to_index(index_to_bits(v, 64)) == v

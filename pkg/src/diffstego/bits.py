"""Bit-level plumbing: payload bits, length framing, segmentation, index codes.

Bit strings are plain ``str`` objects over the alphabet ``{"0", "1"}``.  Every
index encoding is MSB-first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    BadSegmentSpec,
    BitCountOverflow,
    PayloadTooLong,
    TruncatedFrame,
    ValueOverflow,
    WidthOverflow,
)

BitString = str

HEADER_BITS = 32
MAX_INDEX_WIDTH = 64


def check_bits(bits: str) -> str:
    if bits.strip("01"):
        raise ValueError("bit string may only contain '0' and '1'")
    return bits


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def log2_exact(n: int) -> int:
    if not is_power_of_two(n):
        raise BadSegmentSpec(f"{n} is not a power of two")
    return n.bit_length() - 1


@dataclass(frozen=True)
class SegmentSpec:
    """Widths of the prompt block and the batch block of every segment."""

    p_c: int
    k: int

    def __post_init__(self):
        for name, value in (("p_c", self.p_c), ("k", self.k)):
            if not is_power_of_two(value) or value < 2:
                raise BadSegmentSpec(f"{name}={value} must be a power of two >= 2")

    @property
    def m_p(self) -> int:
        return log2_exact(self.p_c)

    @property
    def m_b(self) -> int:
        return log2_exact(self.k)

    @property
    def width(self) -> int:
        return self.m_p + self.m_b


@dataclass(frozen=True)
class Segment:
    index: int
    m_p_block: str
    m_b_block: str

    @property
    def bits(self) -> str:
        return self.m_p_block + self.m_b_block


def bits_from_bytes(payload: bytes, bit_count: int | None = None) -> str:
    available = 8 * len(payload)
    if bit_count is None:
        bit_count = available
    if bit_count < 0 or bit_count > available:
        raise BitCountOverflow(f"asked for {bit_count} bits, payload has {available}")
    if not payload:
        return ""
    return format(int.from_bytes(payload, "big"), f"0{available}b")[:bit_count]


def bytes_from_bits(bits: str) -> bytes:
    """Pack bits MSB-first, zero-filling the final partial byte."""
    check_bits(bits)
    if not bits:
        return b""
    nbytes = (len(bits) + 7) // 8
    padded = bits.ljust(8 * nbytes, "0")
    return int(padded, 2).to_bytes(nbytes, "big")


def frame_payload(payload: str) -> str:
    check_bits(payload)
    if len(payload) >= 1 << HEADER_BITS:
        raise PayloadTooLong(f"payload of {len(payload)} bits does not fit a 32-bit header")
    return format(len(payload), f"0{HEADER_BITS}b") + payload


def unframe_payload(framed: str) -> str:
    check_bits(framed)
    if len(framed) < HEADER_BITS:
        raise TruncatedFrame(f"need {HEADER_BITS} header bits, got {len(framed)}")
    declared = int(framed[:HEADER_BITS], 2)
    body = framed[HEADER_BITS:]
    if declared > len(body):
        raise TruncatedFrame(f"header declares {declared} bits, only {len(body)} follow")
    return body[:declared]


def segment(bits: str, spec: SegmentSpec) -> tuple[list[Segment], int]:
    """Zero-pad ``bits`` to a whole number of segments and split them.

    Returns the segments in order and the number of pad bits appended.
    """
    check_bits(bits)
    width = spec.width
    pad_bits = -len(bits) % width
    padded = bits + "0" * pad_bits
    segments = []
    for i, start in enumerate(range(0, len(padded), width)):
        block = padded[start:start + width]
        segments.append(Segment(i, block[:spec.m_p], block[spec.m_p:]))
    return segments, pad_bits


def unsegment(segments: list[Segment], pad_bits: int = 0) -> str:
    joined = "".join(s.bits for s in segments)
    return joined[:len(joined) - pad_bits] if pad_bits else joined


def bits_to_index(block: str) -> int:
    check_bits(block)
    if len(block) > MAX_INDEX_WIDTH:
        raise WidthOverflow(f"block width {len(block)} exceeds {MAX_INDEX_WIDTH}")
    return int(block, 2) if block else 0


def index_to_bits(value: int, width: int) -> str:
    if width < 0 or width > MAX_INDEX_WIDTH:
        raise WidthOverflow(f"width {width} outside [0, {MAX_INDEX_WIDTH}]")
    if value < 0 or value >= 1 << width:
        raise ValueOverflow(f"{value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""

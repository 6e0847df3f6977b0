"""Piece sets as Python integers.

A user's holdings are a single int: bit ``p - 1`` set means the user holds
piece ``p`` (pieces are numbered 1..k).  Arbitrary-precision ints make the
hot-path set algebra (union, difference, membership) single C-level calls
even for thousands of pieces.
"""

from __future__ import annotations

from random import Random

__all__ = [
    "full_mask",
    "from_pieces",
    "to_pieces",
    "has_piece",
    "count",
    "lowest_piece",
    "highest_piece",
    "random_piece",
]

_MASKS: dict[int, int] = {}


def full_mask(k: int) -> int:
    """The set {1, .., k} as a bit mask."""
    mask = _MASKS.get(k)
    if mask is None:
        if k < 0:
            raise ValueError("k must be non-negative")
        mask = _MASKS[k] = (1 << k) - 1
    return mask


def from_pieces(pieces) -> int:
    """Build a mask from an iterable of piece numbers."""
    bits = 0
    for p in pieces:
        if p < 1:
            raise ValueError(f"piece numbers start at 1, got {p}")
        bits |= 1 << (p - 1)
    return bits


def to_pieces(bits: int) -> list[int]:
    """Sorted piece numbers present in the mask."""
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length())
        bits ^= low
    return out


def has_piece(bits: int, piece: int) -> bool:
    return bits >> (piece - 1) & 1 == 1


def count(bits: int) -> int:
    """Number of pieces in the mask."""
    return bits.bit_count()


def lowest_piece(bits: int) -> int:
    """Smallest piece number in a non-empty mask."""
    if not bits:
        raise ValueError("empty piece set")
    return (bits & -bits).bit_length()


def highest_piece(bits: int) -> int:
    """Largest piece number in a non-empty mask."""
    if not bits:
        raise ValueError("empty piece set")
    return bits.bit_length()


def random_piece(bits: int, rng: Random) -> int:
    """Uniformly random piece number from a non-empty mask.

    Sparse masks are walked bit by bit; dense ones are rejection-sampled
    against the mask's bit span, which terminates quickly because at least
    half the span is populated whenever this branch is taken.
    """
    if not bits:
        raise ValueError("empty piece set")
    c = count(bits)
    if c == 1:
        return bits.bit_length()
    span = bits.bit_length()
    if c << 1 >= span:
        while True:
            p = int(rng.random() * span) + 1
            if p <= span and bits >> (p - 1) & 1:
                return p
    j = int(rng.random() * c)
    if j >= c:  # guard the float rounding edge
        j = c - 1
    for _ in range(j):
        bits &= bits - 1  # strip lowest set bit
    return (bits & -bits).bit_length()

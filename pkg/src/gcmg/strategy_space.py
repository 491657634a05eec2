"""Histories, strategies and the full / reduced strategy spaces.

A history of ``m`` signs is packed into an integer in ``[0, 2**m)`` with the
most recent sign in bit 0 (``+1`` -> 1, ``-1`` -> 0).  A strategy is a lookup
table of length ``P = 2**m`` indexed by that integer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_FSS_MAX_M = 4


class EncodingError(ValueError):
    pass


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class History:
    bits: tuple[int, ...]  # most recent first, values in {-1, +1}
    index: int

    @property
    def m(self) -> int:
        return len(self.bits)


def encode_history(signs: Sequence[int], m: int | None = None) -> History:
    """Pack ``signs`` (most recent first) into a :class:`History`."""
    signs = tuple(int(s) for s in signs)
    if m is None:
        m = len(signs)
    if m < 1 or len(signs) != m:
        raise EncodingError(f"expected {m} signs (m >= 1), got {len(signs)}")
    index = 0
    for k, s in enumerate(signs):
        if s not in (-1, 1):
            raise EncodingError(f"sign at lag {k} is {s!r}, expected -1 or +1")
        if s == 1:
            index |= 1 << k
    return History(signs, index)


def decode_history(index: int, m: int) -> History:
    if m < 1 or not 0 <= index < (1 << m):
        raise EncodingError(f"index {index} out of range for m={m}")
    bits = tuple(1 if (index >> k) & 1 else -1 for k in range(m))
    return History(bits, index)


def shift_history(index: int, sign: int, m: int) -> int:
    """Push ``sign`` in as the most recent entry and drop the oldest."""
    return ((index << 1) | (1 if sign > 0 else 0)) & ((1 << m) - 1)


@dataclass(frozen=True)
class Strategy:
    table: tuple[int, ...]
    is_zero: bool = False

    def __post_init__(self):
        allowed = (0,) if self.is_zero else (-1, 1)
        if any(v not in allowed for v in self.table):
            raise ValueError(f"strategy table entries must be in {allowed}")

    @property
    def m(self) -> int:
        return len(self.table).bit_length() - 1

    @classmethod
    def zero(cls, m: int) -> "Strategy":
        return cls((0,) * (1 << m), is_zero=True)

    @classmethod
    def from_array(cls, row) -> "Strategy":
        return cls(tuple(int(v) for v in row))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int8)


def strategy_action(s: Strategy, h: History | int) -> int:
    index = h.index if isinstance(h, History) else int(h)
    if not 0 <= index < len(s.table):
        raise IndexError(f"history index {index} outside table of size {len(s.table)}")
    return s.table[index]


def _integers_to_tables(codes: np.ndarray, m: int) -> np.ndarray:
    # entry h of a table is bit h of its integer code
    P = 1 << m
    bits = (codes[:, None].astype(np.uint64) >> np.arange(P, dtype=np.uint64)) & np.uint64(1)
    return (2 * bits.astype(np.int8) - 1).astype(np.int8)


def fss_tables(m: int, max_m: int = DEFAULT_FSS_MAX_M) -> np.ndarray:
    """All ``2**(2**m)`` tables as an int8 array, ordered by integer code."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > max_m:
        raise CapacityError(
            f"full strategy space for m={m} has 2**{1 << m} tables; limit is m <= {max_m}"
        )
    return _integers_to_tables(np.arange(1 << (1 << m), dtype=np.uint64), m)


def sylvester_hadamard(order: int) -> np.ndarray:
    if order < 1 or order & (order - 1):
        raise ValueError("order must be a power of two")
    H = np.ones((1, 1), dtype=np.int8)
    while H.shape[0] < order:
        H = np.block([[H, H], [H, -H]])
    return H


def rss_tables(m: int) -> np.ndarray:
    """Hadamard rows followed by their negations: ``2**(m+1)`` tables."""
    if m < 1:
        raise ValueError("m must be >= 1")
    H = sylvester_hadamard(1 << m)
    return np.concatenate([H, -H]).astype(np.int8)


def generate_fss(m: int, max_m: int = DEFAULT_FSS_MAX_M) -> list[Strategy]:
    return [Strategy.from_array(row) for row in fss_tables(m, max_m)]


def generate_rss(m: int) -> list[Strategy]:
    return [Strategy.from_array(row) for row in rss_tables(m)]


def draw_tables(m: int, S: int, rng: np.random.Generator) -> np.ndarray:
    """``S`` distinct tables drawn uniformly from the full space."""
    P = 1 << m
    if S < 1:
        raise ValueError("S must be >= 1")
    if P <= 16:
        space = 1 << P
        if S > space:
            raise CapacityError(f"cannot draw {S} distinct strategies from {space} for m={m}")
        codes = rng.choice(space, size=S, replace=False).astype(np.uint64)
        return _integers_to_tables(codes, m)
    # space is astronomically large here; duplicates are redrawn
    tables = np.empty((S, P), dtype=np.int8)
    seen: set[bytes] = set()
    filled = 0
    while filled < S:
        row = (2 * rng.integers(0, 2, size=P) - 1).astype(np.int8)
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            tables[filled] = row
            filled += 1
    return tables


def draw_strategies(m: int, S: int, rng: np.random.Generator) -> list[Strategy]:
    return [Strategy.from_array(row) for row in draw_tables(m, S, rng)]


def hamming_distance(a, b) -> float:
    """Normalized Hamming distance between two tables."""
    a = np.asarray(a.table if isinstance(a, Strategy) else a)
    b = np.asarray(b.table if isinstance(b, Strategy) else b)
    return float(np.mean(a != b))

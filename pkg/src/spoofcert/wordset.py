"""Sets of fixed-width unsigned words stored as canonical interval lists.

An :class:`IntervalSet` is immutable. Its intervals are inclusive,
sorted, pairwise disjoint and never adjacent, so two sets are equal
exactly when their interval arrays are equal. The width is carried by
each value: 32-bit sets model IPv4 source addresses, small widths
(typically 8) are used by the brute-force oracle.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import InvalidCidrError, UsageError, WidthMismatchError

MAX_WIDTH = 32

__all__ = [
    "Cidr", "IntervalSet", "from_cidr", "union", "intersect", "difference",
    "complement", "is_subset", "is_empty", "member", "to_cidr_list",
    "parse_addr", "format_addr", "parse_cidr", "format_cidr",
    "parse_cidr_set",
]


def _check_width(width: int) -> int:
    if not isinstance(width, (int, np.integer)) or not 1 <= width <= MAX_WIDTH:
        raise UsageError(f"width must be an integer in 1..{MAX_WIDTH}, got {width!r}")
    return int(width)


@dataclass(frozen=True, order=True)
class Cidr:
    base: int
    prefix_len: int
    width: int = 32

    def __post_init__(self):
        _check_width(self.width)
        if not 0 <= self.prefix_len <= self.width:
            raise InvalidCidrError(
                f"prefix length {self.prefix_len} out of range for width {self.width}")
        if not 0 <= self.base < (1 << self.width):
            raise InvalidCidrError(f"address {self.base} out of range for width {self.width}")
        if self.base & ((1 << (self.width - self.prefix_len)) - 1):
            raise InvalidCidrError(
                f"{format_addr(self.base, self.width)}/{self.prefix_len} has host bits set")

    @property
    def first(self) -> int:
        return self.base

    @property
    def last(self) -> int:
        return self.base + (1 << (self.width - self.prefix_len)) - 1

    def __str__(self):
        return format_cidr(self)


class IntervalSet:
    """Immutable set of ``width``-bit words.

    Construct from any iterable of inclusive ``(lo, hi)`` pairs; the input
    need not be sorted or disjoint.

    >>> IntervalSet(8, [(4, 7), (0, 3)]).intervals
    ((0, 7),)
    """

    __slots__ = ("width", "_iv")

    def __init__(self, width: int, intervals: Iterable[Sequence[int]] = ()):
        width = _check_width(width)
        arr = np.asarray(list(intervals), dtype=np.int64).reshape(-1, 2)
        if arr.size:
            top = (1 << width) - 1
            if (arr[:, 0] > arr[:, 1]).any():
                raise UsageError("interval with lo > hi")
            if arr.min() < 0 or arr.max() > top:
                raise UsageError(f"interval bound outside 0..{top}")
        self.width = width
        self._iv = _freeze(kernels.normalize(arr))

    @classmethod
    def _wrap(cls, width: int, arr: np.ndarray) -> "IntervalSet":
        # trusted path: arr is already canonical
        obj = object.__new__(cls)
        obj.width = width
        obj._iv = _freeze(arr)
        return obj

    @classmethod
    def empty(cls, width: int = 32) -> "IntervalSet":
        return cls._wrap(_check_width(width), kernels.numpy_backend.EMPTY)

    @classmethod
    def universe(cls, width: int = 32) -> "IntervalSet":
        width = _check_width(width)
        return cls._wrap(width, np.array([[0, (1 << width) - 1]], dtype=np.int64))

    @classmethod
    def from_cidr(cls, cidr: Cidr) -> "IntervalSet":
        return cls._wrap(cidr.width, np.array([[cidr.first, cidr.last]], dtype=np.int64))

    @classmethod
    def from_values(cls, width: int, values: Iterable[int]) -> "IntervalSet":
        return cls(width, ((v, v) for v in values))

    @property
    def top(self) -> int:
        return (1 << self.width) - 1

    @property
    def array(self) -> np.ndarray:
        """Read-only ``(n, 2)`` int64 view of the canonical intervals."""
        return self._iv

    @property
    def intervals(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(lo), int(hi)) for lo, hi in self._iv)

    def _other(self, other: "IntervalSet") -> np.ndarray:
        if not isinstance(other, IntervalSet):
            raise UsageError(f"expected IntervalSet, got {type(other).__name__}")
        if other.width != self.width:
            raise WidthMismatchError(f"width mismatch: {self.width} vs {other.width}")
        return other._iv

    def union(self, other: "IntervalSet") -> "IntervalSet":
        b = self._other(other)
        if b.shape[0] == 0:
            return self
        if self._iv.shape[0] == 0:
            return other
        return IntervalSet._wrap(self.width, kernels.union(self._iv, b))

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        b = self._other(other)
        return IntervalSet._wrap(self.width, kernels.intersect(self._iv, b, self.top))

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        b = self._other(other)
        if b.shape[0] == 0 or self._iv.shape[0] == 0:
            return self
        return IntervalSet._wrap(self.width, kernels.difference(self._iv, b, self.top))

    def complement(self) -> "IntervalSet":
        return IntervalSet._wrap(self.width, kernels.complement(self._iv, self.top))

    def is_subset(self, other: "IntervalSet") -> bool:
        return bool(kernels.is_subset(self._iv, self._other(other)))

    def is_empty(self) -> bool:
        return self._iv.shape[0] == 0

    def is_universe(self) -> bool:
        return self._iv.shape[0] == 1 and self._iv[0, 0] == 0 and self._iv[0, 1] == self.top

    def member(self, x: int) -> bool:
        if not 0 <= x <= self.top:
            raise UsageError(f"word {x} out of range for width {self.width}")
        return bool(kernels.contains(self._iv, np.array([x], dtype=np.int64))[0])

    def contains_many(self, xs) -> np.ndarray:
        """Boolean membership mask for an array of words."""
        return kernels.contains(self._iv, xs)

    def size(self) -> int:
        """Number of words in the set."""
        return int((self._iv[:, 1] - self._iv[:, 0] + 1).sum())

    def to_cidr_list(self) -> list[Cidr]:
        out = []
        w = self.width
        for lo, hi in self.intervals:
            while lo <= hi:
                # largest block aligned at lo that still fits below hi
                span = (lo & -lo).bit_length() - 1 if lo else w
                while (1 << span) > hi - lo + 1:
                    span -= 1
                out.append(Cidr(lo, w - span, w))
                lo += 1 << span
        return out

    __or__ = union
    __and__ = intersect
    __sub__ = difference
    __invert__ = complement
    __le__ = is_subset
    __contains__ = member

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.width == other.width and np.array_equal(self._iv, other._iv)

    def __hash__(self):
        return hash((self.width, self._iv.tobytes()))

    def __bool__(self):
        return not self.is_empty()

    def __repr__(self):
        return f"IntervalSet({self.width}, {list(self.intervals)!r})"

    def __str__(self):
        if self.is_empty():
            return "{}"
        return ", ".join(str(c) for c in self.to_cidr_list())

    def __reduce__(self):
        return (IntervalSet, (self.width, self.intervals))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def from_cidr(c: Cidr) -> IntervalSet:
    return IntervalSet.from_cidr(c)


def union(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.union(b)


def intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.intersect(b)


def difference(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.difference(b)


def complement(a: IntervalSet) -> IntervalSet:
    return a.complement()


def is_subset(a: IntervalSet, b: IntervalSet) -> bool:
    return a.is_subset(b)


def is_empty(a: IntervalSet) -> bool:
    return a.is_empty()


def member(x: int, a: IntervalSet) -> bool:
    return a.member(x)


def to_cidr_list(a: IntervalSet) -> list[Cidr]:
    return a.to_cidr_list()


def parse_addr(text: str, width: int = 32) -> int:
    """Parse ``a.b.c.d`` (width 32 only) or a plain decimal integer."""
    width = _check_width(width)
    text = text.strip()
    if "." in text:
        if width != 32:
            raise InvalidCidrError(f"dotted address {text!r} needs width 32")
        try:
            return int(ipaddress.IPv4Address(text))
        except ValueError as exc:
            raise InvalidCidrError(f"bad address {text!r}") from exc
    if not text.isdigit():
        raise InvalidCidrError(f"bad address {text!r}")
    value = int(text)
    if value >= 1 << width:
        raise InvalidCidrError(f"address {text!r} out of range for width {width}")
    return value


def format_addr(value: int, width: int = 32) -> str:
    if width == 32:
        return str(ipaddress.IPv4Address(value))
    return str(value)


def parse_cidr(text: str, width: int = 32) -> Cidr:
    """Parse ``addr/len`` or a bare address (full-length prefix)."""
    addr, sep, plen = text.strip().partition("/")
    base = parse_addr(addr, width)
    if not sep:
        return Cidr(base, width, width)
    if not plen.isdigit():
        raise InvalidCidrError(f"bad prefix length in {text!r}")
    return Cidr(base, int(plen), width)


def format_cidr(c: Cidr) -> str:
    return f"{format_addr(c.base, c.width)}/{c.prefix_len}"


def parse_cidr_set(text: str, width: int = 32) -> IntervalSet:
    """Union of a comma-separated CIDR list."""
    parts = [p for p in text.split(",")]
    if not parts or any(not p.strip() for p in parts):
        raise InvalidCidrError(f"empty entry in address list {text!r}")
    cidrs = [parse_cidr(p, width) for p in parts]
    return IntervalSet(width, ((c.first, c.last) for c in cidrs))

"""Packed binary strings.

A Bits value stores up to 64 bits MSB-first in a python int, so "110" is
(n=3, val=0b110). MSB-first keeps lexicographic order on strings equal to
numeric order on values of the same length, which makes canonical rotation
a plain min(). Hashable and immutable; cheap enough to use as dict keys for
trace deduplication.
"""

from __future__ import annotations

from typing import Iterator


class Bits:
    __slots__ = ("n", "val")

    def __init__(self, n: int, val: int):
        n = int(n)
        val = int(val)
        if n < 0:
            raise ValueError("negative length")
        if val < 0 or (n < val.bit_length()):
            raise ValueError(f"value {val} does not fit in {n} bits")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "val", val)

    def __setattr__(self, *_):
        raise AttributeError("Bits is immutable")

    @classmethod
    def from_str(cls, s: str) -> "Bits":
        s = s.strip()
        if s and set(s) - {"0", "1"}:
            raise ValueError(f"not a binary string: {s!r}")
        return cls(len(s), int(s, 2) if s else 0)

    @classmethod
    def from_bits(cls, bits) -> "Bits":
        val = 0
        n = 0
        for b in bits:
            val = (val << 1) | (int(b) & 1)
            n += 1
        return cls(n, val)

    def __str__(self) -> str:
        return format(self.val, f"0{self.n}b") if self.n else ""

    def __repr__(self) -> str:
        return f"Bits({str(self)!r})"

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if isinstance(i, slice):
            start, stop, step = i.indices(self.n)
            if step != 1:
                raise ValueError("only contiguous slices supported")
            m = stop - start
            if m <= 0:
                return Bits(0, 0)
            return Bits(m, (self.val >> (self.n - stop)) & ((1 << m) - 1))
        if i < 0:
            i += self.n
        if not 0 <= i < self.n:
            raise IndexError(i)
        return (self.val >> (self.n - 1 - i)) & 1

    def __iter__(self) -> Iterator[int]:
        for i in range(self.n):
            yield (self.val >> (self.n - 1 - i)) & 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Bits) and self.n == other.n and self.val == other.val

    def __lt__(self, other: "Bits") -> bool:
        # length-first, then lexicographic (== numeric for equal lengths)
        return (self.n, self.val) < (other.n, other.val)

    def __hash__(self) -> int:
        # prepend a 1 so "0" and "00" hash differently
        return hash((1 << self.n) | self.val)

    def __add__(self, other: "Bits") -> "Bits":
        return Bits(self.n + other.n, (self.val << other.n) | other.val)

    def popcount(self) -> int:
        return self.val.bit_count()

    def rotate(self, r: int) -> "Bits":
        """Left rotation: "abcde".rotate(2) == "cdeab"."""
        n = self.n
        if n == 0:
            return self
        r %= n
        if r == 0:
            return self
        mask = (1 << n) - 1
        return Bits(n, ((self.val << r) & mask) | (self.val >> (n - r)))

    def canonical(self) -> "Bits":
        """Lexicographically least rotation."""
        n = self.n
        if n == 0:
            return self
        mask = (1 << n) - 1
        v = self.val
        best = v
        for r in range(1, n):
            v = ((v << 1) & mask) | (v >> (n - 1))
            if v < best:
                best = v
        return Bits(n, best)

    def window(self, start: int, length: int) -> "Bits":
        """Circular window of `length` bits starting at index `start`."""
        n = self.n
        if length > n:
            raise ValueError("window longer than the string")
        start %= n
        if start + length <= n:
            return self[start : start + length]
        head = self[start:n]
        return head + self[0 : start + length - n]


def all_bits(n: int) -> Iterator[Bits]:
    """All 2**n strings of length n in numeric order."""
    for v in range(1 << n):
        yield Bits(n, v)


def necklaces(n: int) -> list[Bits]:
    """Canonical rotation representatives of all length-n strings, sorted."""
    return sorted({b.canonical() for b in all_bits(n)})

"""Shared fixtures and naive reference implementations.

The naive functions here are deliberately dumb: explicit loops over rotations,
deletion subsets, and index tuples. They exist so every fast path in the
package is checked against an independent route; none of them may import the
closed forms they are used to verify.
"""

import itertools
import math

import pytest

from cyclotrace.bits import Bits
from cyclotrace.channel import CircularString

DE_BRUIJN_16 = "0000100110101111"


@pytest.fixture
def de_bruijn16() -> CircularString:
    return CircularString.of(DE_BRUIJN_16)


def naive_trace_law(x: str, q: float) -> dict[str, float]:
    """Rotation x deletion-subset enumeration, one term at a time."""
    n = len(x)
    p = 1.0 - q
    law: dict[str, float] = {}
    for r in range(n):
        rot = x[r:] + x[:r]
        for mask in range(1 << n):
            kept = [rot[i] for i in range(n) if (mask >> i) & 1]
            w = (1.0 / n) * (p ** len(kept)) * (q ** (n - len(kept)))
            key = "".join(kept)
            law[key] = law.get(key, 0.0) + w
    return law


def naive_f(trace: str, w) -> complex:
    """Defining sum of the chain polynomial: all increasing index tuples."""
    k = len(w)
    ones = [i + 1 for i, b in enumerate(trace) if b == "1"]
    total = 0j
    for tup in itertools.combinations(ones, k):
        term = 1 + 0j
        prev = 0
        for wj, ij in zip(w, tup):
            term *= complex(wj) ** (ij - prev)
            prev = ij
        total += term
    return total


def naive_profile(x: str, s: str, D: int) -> list[int]:
    """Cumulative circular subsequence occurrence counts by span."""
    n, k = len(x), len(s)
    spans = []
    for anchor in range(n):
        for offs in itertools.combinations(range(1, n), k - 1):
            positions = [anchor] + [(anchor + o) % n for o in offs]
            if all(x[pos] == bit for pos, bit in zip(positions, s)):
                spans.append((offs[-1] if offs else 0) + 1)
    return [sum(1 for sp in spans if sp <= i + k) for i in range(D + 1)]


def naive_P(z: complex, x: str) -> complex:
    return sum(int(b) * z ** (i + 1) for i, b in enumerate(x))


def all_strings(n: int) -> list[str]:
    return [format(v, f"0{n}b") for v in range(1 << n)]


def law_close(d1: dict[str, float], d2: dict[str, float], tol: float) -> bool:
    keys = set(d1) | set(d2)
    return all(math.isclose(d1.get(key, 0.0), d2.get(key, 0.0), abs_tol=tol) for key in keys)


@pytest.fixture
def bits_of():
    def make(s: str) -> Bits:
        return Bits.from_str(s)

    return make

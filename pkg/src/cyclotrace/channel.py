"""Circular deletion channel.

The channel picks a rotation offset r uniformly from {0..n-1}, rotates the
circular string there, and deletes each bit independently with probability q;
the trace is the retained bits in reading order. Reading "from the first
retained position at or after r" is the same operation bit for bit (the unit
tests check this exhaustively), which is what the k-mer start-probability
accounting leans on.

Also here: the exact small-n law (enumerate n rotations x 2^n deletion masks),
batch sampling with counter-based substreams (reproducible for a given seed no
matter how many threads run), and the pad/unpad reduction that embeds a linear
string into a circular one behind a uniquely-occurring random pad.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .bits import Bits
from .errors import BadArgs, BadLength, InstanceTooLarge, PadNotUnique

# Default CLI seed; any run without an explicit --seed uses this constant.
DEFAULT_SEED = 20260823

# Batch sampling block size. A trace's randomness depends only on its global
# index (block = idx // BLOCK, draws ordered within the block), so output is
# identical for any thread count.
BLOCK = 1 << 16

EXACT_LAW_CAP = 20


class CircularString(Bits):
    """A Bits value read circularly; equality stays positional, use
    canonical() for cyclic comparison."""

    @classmethod
    def of(cls, b: Bits | str) -> "CircularString":
        if isinstance(b, str):
            b = Bits.from_str(b)
        return cls(b.n, b.val)

    def rotate(self, r: int) -> "CircularString":
        return CircularString.of(super().rotate(r))

    def canonical(self) -> "CircularString":
        return CircularString.of(super().canonical())

    def rotations(self) -> Iterator["CircularString"]:
        for r in range(self.n):
            yield self.rotate(r)


class Trace(Bits):
    """A linear (possibly empty) substring produced by the channel."""

    @classmethod
    def of(cls, b: Bits | str) -> "Trace":
        if isinstance(b, str):
            b = Bits.from_str(b)
        return cls(b.n, b.val)


@dataclass(frozen=True)
class ChannelParams:
    """Deletion probability q and retention probability p = 1 - q.

    q = 0 is accepted (pure rotation, useful as a degenerate test case)
    even though ordinary use has 0 < q < 1.
    """

    q: float
    p: float = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise BadArgs(f"deletion probability must be in [0, 1), got {self.q}")
        object.__setattr__(self, "p", 1.0 - self.q)


def resolve_threads(threads: int | None = None) -> int:
    """Thread count: explicit argument, else CYCLOTRACE_THREADS, else 1."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("CYCLOTRACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def generate_trace(x: CircularString, params: ChannelParams, rng: np.random.Generator) -> Trace:
    """One trace: uniform rotation r, then iid deletion with probability q."""
    n = len(x)
    r = int(rng.integers(n))
    keep = rng.random(n) < params.p
    val = 0
    ln = 0
    for j in range(n):
        if keep[j]:
            val = (val << 1) | x[(r + j) % n]
            ln += 1
    return Trace(ln, val)


class TraceBatch:
    """A sequence of traces stored as packed uint64 values + lengths.

    Source length must be <= 63 so the length-disambiguating key
    (1 << len) | value fits in a uint64.
    """

    __slots__ = ("values", "lengths")

    def __init__(self, values: np.ndarray, lengths: np.ndarray):
        self.values = np.asarray(values, dtype=np.uint64)
        self.lengths = np.asarray(lengths, dtype=np.int64)
        if self.values.shape != self.lengths.shape:
            raise ValueError("values/lengths shape mismatch")

    @classmethod
    def from_traces(cls, traces: Iterable[Bits]) -> "TraceBatch":
        pairs = [(t.val, t.n) for t in traces]
        vals = np.fromiter((v for v, _ in pairs), dtype=np.uint64, count=len(pairs))
        lens = np.fromiter((l for _, l in pairs), dtype=np.int64, count=len(pairs))
        return cls(vals, lens)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Trace:
        return Trace(int(self.lengths[i]), int(self.values[i]))

    def __iter__(self) -> Iterator[Trace]:
        for i in range(len(self)):
            yield self[i]

    def unique(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Deduplicated (values, lengths, counts)."""
        keys = (np.uint64(1) << self.lengths.astype(np.uint64)) | self.values
        uk, counts = np.unique(keys, return_counts=True)
        lens = np.zeros(len(uk), dtype=np.int64)
        tmp = uk.copy()
        # bit_length - 1 per key; lengths are <= 63 so a short loop suffices
        for _ in range(64):
            tmp >>= np.uint64(1)
            lens += tmp > 0
        vals = uk & ~(np.uint64(1) << lens.astype(np.uint64))
        return vals, lens, counts

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for i, t in enumerate(self):
                fh.write(json.dumps({"bits": str(t), "idx": i}) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "TraceBatch":
        recs = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    recs.append(json.loads(line))
        recs.sort(key=lambda r: r["idx"])
        return cls.from_traces([Trace.of(r["bits"]) for r in recs])


def _sample_block(xarr: np.ndarray, n: int, p: float, seed: int, block_idx: int, count: int):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block_idx,))
    g = np.random.Generator(np.random.Philox(ss))
    r = g.integers(0, n, size=count)
    keep = g.random((count, n)) < p
    vals = np.zeros(count, dtype=np.uint64)
    lens = np.zeros(count, dtype=np.int64)
    one = np.uint64(1)
    for j in range(n):
        b = xarr[(r + j) % n]
        k = keep[:, j]
        vals = np.where(k, (vals << one) | b, vals)
        lens += k
    return vals, lens


def generate_traces(
    x: CircularString,
    params: ChannelParams,
    count: int,
    seed: int = DEFAULT_SEED,
    threads: int | None = None,
) -> TraceBatch:
    """Seeded batch of `count` traces; bit-identical for any thread count."""
    n = len(x)
    if n > 63:
        raise InstanceTooLarge(f"batch sampling supports n <= 63, got {n}")
    xarr = np.fromiter(x, dtype=np.uint64, count=n)
    nblocks = (count + BLOCK - 1) // BLOCK
    sizes = [min(BLOCK, count - b * BLOCK) for b in range(nblocks)]
    nthreads = resolve_threads(threads)

    def job(b):
        return _sample_block(xarr, n, params.p, seed, b, sizes[b])

    if nthreads > 1 and nblocks > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            parts = list(pool.map(job, range(nblocks)))
    else:
        parts = [job(b) for b in range(nblocks)]
    vals = np.concatenate([p_[0] for p_ in parts]) if parts else np.zeros(0, np.uint64)
    lens = np.concatenate([p_[1] for p_ in parts]) if parts else np.zeros(0, np.int64)
    return TraceBatch(vals, lens)


class ExactTraceDistribution:
    """The exact trace law of one circular string: parallel arrays plus a
    dict view keyed by the trace as a string."""

    __slots__ = ("n", "lengths", "values", "probs", "_dict")

    def __init__(self, n: int, lengths: np.ndarray, values: np.ndarray, probs: np.ndarray):
        order = np.lexsort((values, lengths))
        self.n = n
        self.lengths = np.asarray(lengths, dtype=np.int64)[order]
        self.values = np.asarray(values, dtype=np.uint64)[order]
        self.probs = np.asarray(probs, dtype=np.float64)[order]
        self._dict = None

    def as_dict(self) -> dict[str, float]:
        if self._dict is None:
            d = {}
            for l, v, p in zip(self.lengths, self.values, self.probs):
                d[format(int(v), f"0{int(l)}b") if l else ""] = float(p)
            self._dict = d
        return self._dict

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self) -> Iterator[Trace]:
        for l, v in zip(self.lengths, self.values):
            yield Trace(int(l), int(v))

    def items(self) -> Iterator[tuple[Trace, float]]:
        for l, v, p in zip(self.lengths, self.values, self.probs):
            yield Trace(int(l), int(v)), float(p)

    def get(self, key, default: float = 0.0) -> float:
        if isinstance(key, Bits):
            key = str(key)
        return self.as_dict().get(key, default)

    def __getitem__(self, key) -> float:
        if isinstance(key, Bits):
            key = str(key)
        return self.as_dict()[key]

    def __contains__(self, key) -> bool:
        if isinstance(key, Bits):
            key = str(key)
        return key in self.as_dict()

    def mass(self) -> float:
        return float(self.probs.sum())

    def prefix_mass(self, pattern: Bits) -> float:
        """Total probability of traces whose first len(pattern) bits equal it."""
        k = pattern.n
        sel = self.lengths >= k
        shifted = self.values[sel] >> (self.lengths[sel] - k).astype(np.uint64)
        return float(self.probs[sel][shifted == np.uint64(pattern.val)].sum())

    def restricted(self, keep) -> "ExactTraceDistribution":
        """Sub-measure of the entries whose Trace satisfies `keep` (not renormalized)."""
        mask = np.fromiter((bool(keep(t)) for t in self), dtype=bool, count=len(self))
        return ExactTraceDistribution(self.n, self.lengths[mask], self.values[mask], self.probs[mask])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("trace,probability\n")
            for t, p in self.items():
                fh.write(f"{t},{p!r}\n")

    @classmethod
    def from_csv(cls, path, n: int | None = None) -> "ExactTraceDistribution":
        lens, vals, probs = [], [], []
        with open(path) as fh:
            header = fh.readline()
            if header.strip() != "trace,probability":
                raise ValueError(f"unexpected header {header!r}")
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                t, p = line.split(",")
                b = Bits.from_str(t)
                lens.append(b.n)
                vals.append(b.val)
                probs.append(float(p))
        nn = n if n is not None else (max(lens) if lens else 0)
        return cls(nn, np.array(lens, np.int64), np.array(vals, np.uint64), np.array(probs))


def exact_trace_distribution(x: CircularString, params: ChannelParams) -> ExactTraceDistribution:
    """Enumerate all n rotations x 2^n deletion masks; cost n * 2^n."""
    n = len(x)
    if n > EXACT_LAW_CAP:
        raise InstanceTooLarge(f"exact law capped at n <= {EXACT_LAW_CAP}, got {n}")
    q, p = params.q, params.p
    # probability of one (rotation, mask) cell with l bits retained
    cell = np.array([(q ** (n - l)) * (p**l) / n for l in range(n + 1)])

    masks = np.arange(1 << n, dtype=np.uint64)
    one = np.uint64(1)
    acc: dict[int, float] = {}
    for r in range(n):
        xr = x.rotate(r)
        vals = np.zeros(1 << n, dtype=np.uint64)
        lens = np.zeros(1 << n, dtype=np.int64)
        for j in range(n):
            sel = ((masks >> np.uint64(n - 1 - j)) & one).astype(bool)
            b = np.uint64(xr[j])
            vals = np.where(sel, (vals << one) | b, vals)
            lens += sel
        keys = (one << lens.astype(np.uint64)) | vals
        uk, inv = np.unique(keys, return_inverse=True)
        sums = np.bincount(inv, weights=cell[lens])
        for k, s in zip(uk.tolist(), sums.tolist()):
            acc[k] = acc.get(k, 0.0) + s
    lens_out = np.array([k.bit_length() - 1 for k in acc], dtype=np.int64)
    vals_out = np.array([k ^ (1 << (k.bit_length() - 1)) for k in acc], dtype=np.uint64)
    probs_out = np.fromiter(acc.values(), dtype=np.float64, count=len(acc))
    return ExactTraceDistribution(n, lens_out, vals_out, probs_out)


def pad_linear(
    x_linear: Bits | str,
    m: int,
    rng: np.random.Generator,
    pad: Bits | str | None = None,
) -> tuple[CircularString, Bits]:
    """Embed a linear string into a circular one of length m >= 2n.

    Appends a uniformly random pad of length m - n (or the one passed in,
    which exists so tests can pin it) and returns (circular string, pad).
    """
    if isinstance(x_linear, str):
        x_linear = Bits.from_str(x_linear)
    n = len(x_linear)
    if m < 2 * n:
        raise BadLength(f"pad target m={m} below 2n={2 * n}")
    if pad is None:
        pad_bits = Bits.from_bits(int(b) for b in rng.integers(0, 2, size=m - n))
    else:
        pad_bits = Bits.from_str(pad) if isinstance(pad, str) else pad
        if len(pad_bits) != m - n:
            raise BadLength(f"explicit pad must have length {m - n}")
    return CircularString.of(x_linear + pad_bits), pad_bits


def unpad(xc: CircularString, pad: Bits | str) -> Bits:
    """Invert pad_linear: locate the pad's unique circular occurrence and
    return the complementary arc."""
    if isinstance(pad, str):
        pad = Bits.from_str(pad)
    if len(pad) == 0:
        raise BadLength("pad must be nonempty")
    m = len(xc)
    hits = [s for s in range(m) if xc.window(s, len(pad)) == pad]
    if len(hits) != 1:
        raise PadNotUnique(f"pad occurs {len(hits)} times")
    s = hits[0]
    return xc.window(s + len(pad), m - len(pad))

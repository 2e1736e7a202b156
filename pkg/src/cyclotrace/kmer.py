"""Average-case reconstruction from k-mer statistics.

The route to the string goes through counting. For a pattern s of length k,
``c_i`` counts the circular subsequence occurrences of s whose span (first to
last matched position, inclusive, in circular order) is at most i + k. The
probability that a trace begins with s is then exactly

    (1/n) * (1-q)^k * sum_i c_i q^i,

so the start probability, viewed as a function of the deletion rate, is a
polynomial whose constant term c_0 is the number of *consecutive* occurrences
of s. Re-running the channel at higher deletion rates only needs extra
thinning of traces already in hand (boosting), which gives evaluations of that
polynomial along a grid of rates; solving the little Vandermonde system and
rounding recovers c_0. Doing this for every pattern yields the k-mer census,
and for a regular string (all k-windows and all (k-1)-windows distinct) the
census glues back into the circular string by walking successor links.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, NamedTuple

import numpy as np

from .bits import Bits
from .channel import (
    BLOCK,
    DEFAULT_SEED,
    ChannelParams,
    CircularString,
    Trace,
    TraceBatch,
    resolve_threads,
)
from .errors import (
    BadArgs,
    BadTarget,
    EmptyTraceStream,
    IllConditioned,
    InstanceTooLarge,
    InsufficientTraces,
    NotRegular,
    PatternTooLong,
)

# Lower bound used when weighting least-squares rows by the estimated binomial
# standard deviation; keeps all-zero estimates from producing infinite weights.
_PROB_FLOOR = 1e-12

# Census-wide operations allocate 2**k slots.
_CENSUS_K_CAP = 20


def _as_pattern(s: Bits | str) -> Bits:
    return Bits.from_str(s) if isinstance(s, str) else s


def _as_circular(x: CircularString | Bits | str) -> CircularString:
    return x if isinstance(x, CircularString) else CircularString.of(x)


def _as_batch(traces) -> TraceBatch:
    if isinstance(traces, TraceBatch):
        return traces
    return TraceBatch.from_traces(list(traces))


@dataclass(frozen=True)
class KmerProfile:
    """Cumulative occurrence counts of one pattern in one circular string.

    ``coeffs[i]`` is c_i: the number of circular subsequence occurrences of
    ``pattern`` with span at most i + k inside a host string of length ``n``.
    """

    pattern: Bits
    n: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        k = len(self.pattern)
        prev = 0
        for i, c in enumerate(self.coeffs):
            if c < prev:
                raise BadArgs(f"c_{i}={c} below c_{i - 1}={prev}; counts are cumulative")
            if c > self.n * math.comb(i + k, k):
                raise BadArgs(f"c_{i}={c} exceeds n*C({i + k},{k})")
            prev = c

    @property
    def k(self) -> int:
        return len(self.pattern)

    def poly(self, t: float) -> float:
        """Evaluate sum_i c_i t^i."""
        return float(np.polynomial.polynomial.polyval(t, np.asarray(self.coeffs, dtype=float)))


@dataclass
class KmerCensus:
    """Multiset of consecutive length-k circular substrings, as pattern -> c_0."""

    k: int
    counts: dict[Bits, int]

    @classmethod
    def from_string(cls, x: CircularString | Bits | str, k: int) -> "KmerCensus":
        x = _as_circular(x)
        counts: dict[Bits, int] = {}
        for i in range(len(x)):
            w = x.window(i, k)
            counts[w] = counts.get(w, 0) + 1
        return cls(k, counts)

    def total(self) -> int:
        return sum(self.counts.values())

    def present(self) -> list[Bits]:
        return sorted(p for p, c in self.counts.items() if c > 0)


def default_k(n: int) -> int:
    """Smallest k with 2**(k-1) >= 2n, capped at n.

    The cap keeps patterns no longer than the string; the 2n headroom leaves
    enough (k-1)-mer diversity for typical strings to be regular.
    """
    if n < 1:
        raise BadArgs(f"n must be positive, got {n}")
    return min(1 + (2 * n - 1).bit_length(), n)


class _Resolved(NamedTuple):
    k: int
    r: float
    alpha: float
    D: int
    grid_size: int
    traces_per_point: int | None
    cond_cap: float


@dataclass(frozen=True)
class KmerConfig:
    """Knobs for census recovery.

    ``r`` is the boost ceiling (defaults to (q+1)/2) and ``alpha`` the
    truncation multiplier (defaults to 4/(1-r)); the fitted polynomial degree
    is D = min(alpha*k, n-k). The defaults make the truncated polynomial an
    excellent approximation, but at full degree the constant term is poorly
    conditioned against sampling noise; when recovering from traces, a small
    ``alpha`` (degree 2-3) with ``r`` pulled down toward q is far more robust.
    ``traces_per_point`` of None splits the available batch evenly across the
    grid.
    """

    k: int | None = None
    alpha: float | None = None
    r: float | None = None
    grid_size: int | None = None
    traces_per_point: int | None = None
    cond_cap: float = 1e12

    def resolve(self, params: ChannelParams, n: int, k: int | None = None) -> _Resolved:
        if k is None:
            k = self.k if self.k is not None else default_k(n)
        if k < 1:
            raise BadArgs(f"k must be positive, got {k}")
        if k > n:
            raise PatternTooLong(f"k={k} exceeds n={n}")
        r = self.r if self.r is not None else (params.q + 1.0) / 2.0
        if not params.q <= r < 1.0:
            raise BadArgs(f"boost ceiling r={r} must lie in [q, 1)")
        alpha = self.alpha if self.alpha is not None else 4.0 / (1.0 - r)
        if alpha <= 0:
            raise BadArgs(f"alpha must be positive, got {alpha}")
        D = min(int(alpha * k), n - k)
        grid = self.grid_size if self.grid_size is not None else D + 3
        if grid < 1:
            raise BadArgs(f"grid_size must be positive, got {grid}")
        if self.traces_per_point is not None and self.traces_per_point < 1:
            raise BadArgs(f"traces_per_point must be positive, got {self.traces_per_point}")
        return _Resolved(k, r, alpha, D, grid, self.traces_per_point, self.cond_cap)


def kmer_profile_exact(x: CircularString | Bits | str, s: Bits | str, D: int) -> KmerProfile:
    """Brute-force profile: every circular start position and index pattern.

    An occurrence is an anchor a with x[a] = s[0] plus strictly increasing
    offsets d_1 < ... < d_{k-1} in {1..n-1} matching the rest of s; its span is
    d_{k-1} + 1. Occurrences through the same positions but different anchors
    count separately.
    """
    x = _as_circular(x)
    s = _as_pattern(s)
    n, k = len(x), len(s)
    if k < 1:
        raise BadArgs("pattern must be nonempty")
    if k > n:
        raise PatternTooLong(f"pattern length {k} exceeds n={n}")
    if not 0 <= D <= n - k:
        raise BadArgs(f"D={D} outside [0, n-k={n - k}]")
    xb = tuple(x)
    sb = tuple(s)
    span_count = [0] * (n + 1)
    rest = sb[1:]
    for a in range(n):
        if xb[a] != sb[0]:
            continue
        if k == 1:
            span_count[1] += 1
            continue
        for combo in combinations(range(1, n), k - 1):
            for j, d in enumerate(combo):
                if xb[(a + d) % n] != rest[j]:
                    break
            else:
                span_count[combo[-1] + 1] += 1
    coeffs = []
    running = 0
    for span in range(1, n + 1):
        running += span_count[span]
        if span >= k:
            coeffs.append(running)
    return KmerProfile(s, n, tuple(coeffs[: D + 1]))


def start_prob_exact(x: CircularString | Bits | str, s: Bits | str, params: ChannelParams) -> float:
    """Exact probability that a trace of x begins with s.

    Equals (1/n)(1-q)^k sum_{i=0}^{n-k} c_i q^i with the untruncated profile,
    which in turn equals the prefix mass of s under the exact trace law.
    """
    x = _as_circular(x)
    s = _as_pattern(s)
    n, k = len(x), len(s)
    prof = kmer_profile_exact(x, s, n - k)
    q = params.q
    poly = math.fsum(c * q**i for i, c in enumerate(prof.coeffs))
    return (1.0 / n) * params.p**k * poly


def boost_deletion(trace: Trace, q: float, q_target: float, rng: np.random.Generator) -> Trace:
    """Thin a trace so a channel at q composed with the thinning is a channel
    at q_target: each bit is deleted independently with (q_target-q)/(1-q)."""
    if not 0.0 <= q <= q_target < 1.0:
        raise BadTarget(f"need 0 <= q <= q_target < 1, got q={q}, q_target={q_target}")
    d = (q_target - q) / (1.0 - q)
    if d == 0.0:
        return Trace.of(trace)
    keep = rng.random(len(trace)) < 1.0 - d
    return Trace.of(Bits.from_bits(b for b, kp in zip(trace, keep) if kp))


def _boost_batch(values: np.ndarray, lengths: np.ndarray, d: float, rng: np.random.Generator):
    """Apply iid deletion with probability d to every trace in a packed batch."""
    if d <= 0.0:
        return values.copy(), lengths.copy()
    out_v = np.empty_like(values)
    out_l = np.empty_like(lengths)
    one = np.uint64(1)
    cols = np.arange(64, dtype=np.int64)
    col_shift = (np.uint64(63) - cols.astype(np.uint64))[None, :]
    for lo in range(0, len(values), BLOCK):
        v = values[lo : lo + BLOCK]
        l = lengths[lo : lo + BLOCK]
        cnt = len(v)
        # MSB-align so column j is bit j of every trace; l=0 rows are all zero
        aligned = v << ((64 - l) & 63).astype(np.uint64)
        bits = (aligned[:, None] >> col_shift) & one
        keep = (rng.random((cnt, 64)) < 1.0 - d) & (cols[None, :] < l[:, None])
        nv = np.zeros(cnt, dtype=np.uint64)
        for j in range(64):
            kj = keep[:, j]
            nv = np.where(kj, (nv << one) | bits[:, j], nv)
        out_v[lo : lo + BLOCK] = nv
        out_l[lo : lo + BLOCK] = keep.sum(axis=1).astype(np.int64)
    return out_v, out_l


def estimate_start_prob(traces, s: Bits | str) -> float:
    """Fraction of traces whose first len(s) bits equal s; shorter traces
    count as non-matches."""
    s = _as_pattern(s)
    batch = _as_batch(traces)
    if len(batch) == 0:
        raise EmptyTraceStream("no traces to estimate from")
    k = len(s)
    if k == 0:
        return 1.0
    sel = batch.lengths >= k
    shifted = batch.values[sel] >> (batch.lengths[sel] - k).astype(np.uint64)
    return int((shifted == np.uint64(s.val)).sum()) / len(batch)


def _chebyshev_nodes(lo: float, hi: float, count: int) -> np.ndarray:
    j = np.arange(count)
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    return np.sort(mid + half * np.cos(np.pi * (2 * j + 1) / (2 * count)))


def _solve_c0(nodes: np.ndarray, phat: np.ndarray, n: int, k: int, D: int, cond_cap: float) -> int:
    """Weighted least squares for the profile coefficients; returns c_0
    rounded and clamped to [0, n].

    Each start-probability estimate is divided by (1/n)(1-q')^k to give a
    noisy evaluation of the profile polynomial; rows are weighted by the
    reciprocal of the binomial standard deviation propagated through that
    division (constant sample-size factors drop out of the solution).
    """
    G = len(nodes)
    if G < D + 1:
        raise IllConditioned(f"{G} grid points cannot determine {D + 1} coefficients")
    scale = (1.0 / n) * (1.0 - nodes) ** k
    y = phat / scale
    p_clip = np.clip(phat, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    w = scale / np.sqrt(p_clip * (1.0 - p_clip))
    A = np.vander(nodes, D + 1, increasing=True) * w[:, None]
    b = y * w
    sol, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if rank < D + 1 or not math.isfinite(cond) or cond > cond_cap:
        raise IllConditioned(f"design condition {cond:.3g} exceeds cap {cond_cap:.3g}")
    return min(max(int(round(float(sol[0]))), 0), n)


def recover_c0(
    traces,
    s: Bits | str,
    params: ChannelParams,
    config: KmerConfig | None,
    n: int,
    *,
    rng: np.random.Generator | None = None,
    start_prob_fn: Callable[[float], float] | None = None,
) -> int:
    """Recover the consecutive-occurrence count of one pattern from traces.

    Start probabilities are estimated on a Chebyshev grid of boosted deletion
    rates in [q, r], each grid point consuming its own slice of the batch, and
    the profile polynomial is fit through them. ``start_prob_fn`` substitutes
    exact evaluations for the sampled ones (the traces argument is then
    ignored), which pins down the linear algebra in tests before noise enters.

    ``n`` is the length of the unknown circular string: the law divides
    through by (1/n)(1-q')^k and c_0 can be at most n.
    """
    s = _as_pattern(s)
    k = len(s)
    if k > n:
        raise PatternTooLong(f"pattern length {k} exceeds n={n}")
    cfg = (config or KmerConfig()).resolve(params, n, k=k)
    nodes = _chebyshev_nodes(params.q, cfg.r, cfg.grid_size)
    if start_prob_fn is not None:
        phat = np.array([float(start_prob_fn(t)) for t in nodes])
    else:
        batch = _as_batch(traces)
        T = cfg.traces_per_point or len(batch) // cfg.grid_size
        if T < 1 or len(batch) < cfg.grid_size * T:
            raise InsufficientTraces(
                f"need grid_size*traces_per_point = {cfg.grid_size}*{T} traces, have {len(batch)}"
            )
        if rng is None:
            # two-element spawn key: the one-element namespace belongs to
            # the trace-generation blocks at the same seed
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(DEFAULT_SEED, spawn_key=(1, 0)))
            )
        phat = np.empty(cfg.grid_size)
        for j, t in enumerate(nodes):
            d = (t - params.q) / (1.0 - params.q)
            v, l = _boost_batch(
                batch.values[j * T : (j + 1) * T], batch.lengths[j * T : (j + 1) * T], d, rng
            )
            sel = l >= k
            hits = int((v[sel] >> (l[sel] - k).astype(np.uint64) == np.uint64(s.val)).sum())
            phat[j] = hits / T
    return _solve_c0(nodes, phat, n, k, cfg.D, cfg.cond_cap)


@dataclass(frozen=True)
class ProfileSeparation:
    q_best: float
    gap: float


def distinguish_profiles(
    a: KmerProfile,
    b: KmerProfile,
    params: ChannelParams,
    config: KmerConfig | None = None,
    points: int = 512,
) -> ProfileSeparation:
    """Best separating boosted rate for two candidate profiles: the q' in
    [q, r] maximizing |P_a(q') - P_b(q')| over a dense grid."""
    cfg = (config or KmerConfig()).resolve(params, max(a.n, b.n), k=a.k)
    ts = np.linspace(params.q, cfg.r, points)
    pa = np.polynomial.polynomial.polyval(ts, np.asarray(a.coeffs, dtype=float))
    pb = np.polynomial.polynomial.polyval(ts, np.asarray(b.coeffs, dtype=float))
    gap = np.abs(pa - pb)
    i = int(np.argmax(gap))
    return ProfileSeparation(float(ts[i]), float(gap[i]))


def regularity_check(x: CircularString | Bits | str, k: int) -> bool:
    """True iff all n circular k-windows are distinct and all n circular
    (k-1)-windows are distinct."""
    x = _as_circular(x)
    n = len(x)
    if not 1 <= k <= n:
        raise BadArgs(f"k={k} outside [1, n={n}]")
    if len({x.window(i, k) for i in range(n)}) != n:
        return False
    return len({x.window(i, k - 1) for i in range(n)}) == n


def glue_census(census: KmerCensus, n: int) -> CircularString:
    """Reassemble a regular circular string from its k-mer census.

    Needs every count in {0, 1}, exactly n present patterns, and distinct
    (k-1)-prefixes; then each pattern has a unique successor (the one whose
    prefix is its suffix) and the walk must trace a single n-cycle through
    every present pattern. Returns the canonical rotation.
    """
    k = census.k
    items = [(_as_pattern(p), c) for p, c in census.counts.items()]
    for p, c in items:
        if len(p) != k:
            raise BadArgs(f"pattern {p} does not have length k={k}")
        if not 0 <= c <= 1:
            raise NotRegular(f"pattern {p} has multiplicity {c}")
    present = sorted(p for p, c in items if c == 1)
    if len(present) != n:
        raise NotRegular(f"{len(present)} patterns present, expected n={n}")
    prefix_to_pattern: dict[Bits, Bits] = {}
    for p in present:
        key = p[0 : k - 1]
        if key in prefix_to_pattern:
            raise NotRegular(f"prefix {key} shared by {prefix_to_pattern[key]} and {p}")
        prefix_to_pattern[key] = p
    start = present[0]
    seq = []
    cur = start
    for step in range(n):
        seq.append(cur)
        nxt = prefix_to_pattern.get(cur[1:k])
        if nxt is None:
            raise NotRegular(f"no successor for {cur}")
        if nxt == start and step != n - 1:
            raise NotRegular("cycle closes early")
        cur = nxt
    if cur != start:
        raise NotRegular("walk does not close")
    if len(set(seq)) != n:
        raise NotRegular("walk repeats a pattern")
    return CircularString.of(Bits.from_bits(p[0] for p in seq)).canonical()


def _observed_windows(batch: TraceBatch, k: int) -> np.ndarray:
    """Boolean table over all 2**k patterns: seen as a contiguous window of
    some trace."""
    seen = np.zeros(1 << k, dtype=bool)
    if len(batch) == 0:
        return seen
    mask = np.uint64((1 << k) - 1)
    maxlen = int(batch.lengths.max())
    for j in range(maxlen - k + 1):
        sel = batch.lengths >= k + j
        w = (batch.values[sel] >> (batch.lengths[sel] - k - j).astype(np.uint64)) & mask
        seen[w.astype(np.int64)] = True
    return seen


def recover_census(
    traces,
    n: int,
    params: ChannelParams,
    config: KmerConfig | None = None,
    *,
    seed: int = DEFAULT_SEED,
    threads: int | None = None,
) -> KmerCensus:
    """Estimate the k-mer census of the unknown source from traces.

    Candidate patterns are those observed as a contiguous window of some
    trace, plus one-bit extensions of observed (k-1)-windows; everything else
    is assigned c_0 = 0 outright. The batch is split evenly across the grid,
    each slice boosted once and shared by all patterns (the per-pattern
    estimates are plain prefix counts on the boosted slice). Boost randomness
    comes from substreams keyed by (seed, grid index), disjoint from the
    generation substreams, so results are reproducible for any thread count.
    """
    batch = _as_batch(traces)
    m = len(batch)
    if m == 0:
        raise EmptyTraceStream("no traces to reconstruct from")
    cfg = (config or KmerConfig()).resolve(params, n)
    k = cfg.k
    if k > _CENSUS_K_CAP:
        raise InstanceTooLarge(f"census recovery allocates 2**k slots; k={k} exceeds {_CENSUS_K_CAP}")
    G = cfg.grid_size
    T = cfg.traces_per_point or m // G
    if T < 1 or m < G * T:
        raise InsufficientTraces(f"need grid_size*traces_per_point = {G}*{T} traces, have {m}")
    nodes = _chebyshev_nodes(params.q, cfg.r, G)

    candidates = set(np.nonzero(_observed_windows(batch, k))[0].tolist())
    if k >= 2:
        for w in np.nonzero(_observed_windows(batch, k - 1))[0].tolist():
            for b2 in (0, 1):
                candidates.add((b2 << (k - 1)) | w)
                candidates.add((w << 1) | b2)

    phat = np.zeros((G, 1 << k))
    for j, t in enumerate(nodes):
        d = (t - params.q) / (1.0 - params.q)
        g = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1, j))))
        v, l = _boost_batch(batch.values[j * T : (j + 1) * T], batch.lengths[j * T : (j + 1) * T], d, g)
        sel = l >= k
        fk = (v[sel] >> (l[sel] - k).astype(np.uint64)).astype(np.int64)
        phat[j] = np.bincount(fk, minlength=1 << k) / T

    def solve(pv: int) -> tuple[int, int]:
        return pv, _solve_c0(nodes, phat[:, pv], n, k, cfg.D, cfg.cond_cap)

    order = sorted(candidates)
    nthreads = resolve_threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(solve, order))
    else:
        results = [solve(pv) for pv in order]

    counts = {Bits(k, pv): c0 for pv, c0 in results if c0 > 0}
    return KmerCensus(k, counts)


def average_case_reconstruct(
    traces,
    n: int,
    params: ChannelParams,
    config: KmerConfig | None = None,
    *,
    seed: int = DEFAULT_SEED,
    threads: int | None = None,
) -> CircularString:
    """Full pipeline: recover_census then glue_census.

    A census that does not account for all n windows is rejected before the
    gluing walk so the error names the real problem (too few traces or too
    noisy a fit) rather than a spurious gluing failure.
    """
    census = recover_census(traces, n, params, config, seed=seed, threads=threads)
    total = census.total()
    if total != n:
        raise InsufficientTraces(f"recovered census totals {total}, expected n={n}")
    return glue_census(census, n)

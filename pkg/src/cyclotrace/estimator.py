"""Complex-weight trace estimators and the worst-case distinguisher.

For a circular string x of length n write P(z; x) = sum_{i=1}^n x_i z^i with
1-based exponents. Rotation mixing makes P itself unidentifiable from traces;
the identifiable object is

    Q_t(z; x) = sum_{j=0}^{n-1} z^{t n} P(z; x^{(j)})^t P(z^{-t}; x^{(j)})

which is invariant under rotation of x when z is an n-th root of unity. Two
pieces build the estimator:

* g_m(trace, Z) is unbiased for prod_k P(z_k; y) over the linear deletion
  channel with retention p. It sums, over nested chains
  B_1 = {1..m} > B_2 > ... > B_k (strict, nonempty), the chain polynomial
  f(trace, w_B) with weights w_B,r = (z_{B_r} - q)/p where z_S = prod_{i in S} z_i,
  scaled by p^{-k} prod_r z_{B_r} / w_{B_r}. The number of chains is the
  ordered-set-partition count (1, 3, 13, 75, 541, 4683 for m = 1..6).
* h_t(trace) = n z^{t n} g_{t+1}(trace, (z,...,z, z^{-t})) is then unbiased
  for Q_t(z; x) over the circular channel.

f is evaluated by an O(len * k) forward recursion in the kernel backend.
Chains whose weight sequences coincide (frequent for the structured Z used by
h_t) are merged at plan-build time, which cuts the t=5 work about twentyfold.

The distinguisher scans t in {2, 3, 5} over a unit-circle grid (all n-th
roots of unity plus G uniformly spaced points of the arc |arg z| <= 1/L),
takes the point maximizing |Q_t(z;a) - Q_t(z;b)|, averages h_t over the trace
batch there, and votes for the closer candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import fsum
from typing import Iterable, Sequence

import numpy as np

from . import backend
from .bits import Bits, necklaces
from .channel import ChannelParams, CircularString, Trace, TraceBatch
from .errors import (
    DegenerateWeight,
    EmptyTraceStream,
    InstanceTooLarge,
    LengthMismatch,
    NoCondorcetWinner,
)

TWO_PI = 2.0 * math.pi


def _csum(terms) -> complex:
    terms = list(terms)
    return complex(fsum(t.real for t in terms), fsum(t.imag for t in terms))


@lru_cache(maxsize=None)
def _cis_table(n: int) -> tuple[complex, ...]:
    return tuple(complex(math.cos(TWO_PI * j / n), math.sin(TWO_PI * j / n)) for j in range(n))


@dataclass(frozen=True)
class UnitPoint:
    """A point on the unit circle, either an exact root of unity (index k of
    order n, so arithmetic on powers stays in index space and never drifts)
    or a free angle in (-pi, pi]."""

    k: int | None = None
    n: int | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.angle is None:
            if self.k is None or self.n is None or self.n <= 0:
                raise ValueError("need (k, n) or angle")
            object.__setattr__(self, "k", self.k % self.n)
        else:
            if self.k is not None or self.n is not None:
                raise ValueError("give either (k, n) or angle, not both")

    @classmethod
    def from_index(cls, k: int, n: int) -> "UnitPoint":
        return cls(k=k, n=n)

    @classmethod
    def from_angle(cls, theta: float) -> "UnitPoint":
        theta = math.remainder(theta, TWO_PI)
        if theta <= -math.pi:
            theta += TWO_PI
        return cls(angle=theta)

    @property
    def is_root(self) -> bool:
        return self.angle is None

    @property
    def arg(self) -> float:
        if self.is_root:
            theta = TWO_PI * self.k / self.n
            if theta > math.pi:
                theta -= TWO_PI
            return theta
        return self.angle

    @property
    def value(self) -> complex:
        if self.is_root:
            return _cis_table(self.n)[self.k]
        return complex(math.cos(self.angle), math.sin(self.angle))

    def __complex__(self) -> complex:
        return self.value

    def pow(self, e: int) -> "UnitPoint":
        if self.is_root:
            return UnitPoint(k=(self.k * e) % self.n, n=self.n)
        return UnitPoint.from_angle(self.angle * e)

    def conj(self) -> "UnitPoint":
        return self.pow(-1)

    def key(self):
        return ("r", self.k, self.n) if self.is_root else ("a", self.angle)


def root_of_unity(k: int, n: int) -> UnitPoint:
    return UnitPoint.from_index(k, n)


@dataclass(frozen=True)
class NestedChain:
    """Strictly decreasing chain of nonempty subsets of {1..m}, starting at
    the full set. These index the correction terms of g_m."""

    m: int
    sets: tuple[frozenset, ...]

    def __post_init__(self):
        full = frozenset(range(1, self.m + 1))
        if not self.sets or self.sets[0] != full:
            raise ValueError("chain must start at the full set {1..m}")
        for a, b in zip(self.sets, self.sets[1:]):
            if not (b < a):
                raise ValueError("chain must be strictly decreasing")
        if not self.sets[-1]:
            raise ValueError("chain sets must be nonempty")

    @property
    def depth(self) -> int:
        return len(self.sets)


@lru_cache(maxsize=None)
def _raw_chains(m: int) -> tuple[tuple[frozenset, ...], ...]:
    full = frozenset(range(1, m + 1))
    out: list[tuple[frozenset, ...]] = []

    def rec(chain: tuple[frozenset, ...]):
        out.append(chain)
        last = sorted(chain[-1])
        sz = len(last)
        if sz <= 1:
            return
        for mask in range(1, (1 << sz) - 1):
            sub = frozenset(last[i] for i in range(sz) if (mask >> i) & 1)
            rec(chain + (sub,))

    rec((full,))
    return tuple(out)


def all_chains(m: int) -> list[NestedChain]:
    return [NestedChain(m, c) for c in _raw_chains(m)]


class EstimatorPlan:
    """Flattened, merge-deduplicated chain table for one (Z, q) pair.

    Row r holds a weight vector W[r, :klist[r]] and a coefficient; the
    estimate of a trace is sum_r coef[r] * f(trace, W_row). Rows are merged
    by exact weight-sequence equality, accumulating coefficients.
    """

    __slots__ = ("m", "q", "W", "klist", "coef")

    def __init__(self, m: int, q: float, W: np.ndarray, klist: np.ndarray, coef: np.ndarray):
        self.m = m
        self.q = q
        self.W = W
        self.klist = klist
        self.coef = coef

    def rows_single(self, val: int, ln: int) -> np.ndarray:
        return backend.plan_rows_single(val, ln, self.W, self.klist)

    def batch_rows(self, values, lengths, weights) -> np.ndarray:
        return backend.plan_batch_rows(values, lengths, weights, self.W, self.klist)

    def combine(self, rows: np.ndarray) -> complex:
        return _csum(c * r for c, r in zip(self.coef.tolist(), rows.tolist()))


@lru_cache(maxsize=None)
def build_plan(Z: tuple[complex, ...], q: float) -> EstimatorPlan:
    m = len(Z)
    p = 1.0 - q
    set_prod: dict[frozenset, complex] = {}

    def zprod(s: frozenset) -> complex:
        v = set_prod.get(s)
        if v is None:
            v = 1.0 + 0j
            for i in sorted(s):
                v *= Z[i - 1]
            set_prod[s] = v
        return v

    rows: dict[tuple, complex] = {}
    for chain in _raw_chains(m):
        zb = [zprod(s) for s in chain]
        wb = [(z - q) / p for z in zb]
        for w in wb:
            if abs(w) < 1e-12:
                raise DegenerateWeight(f"|({w * p + q}) - q|/p = {abs(w)} below floor")
        coef = p ** (-len(chain))
        for z, w in zip(zb, wb):
            coef *= z / w
        key = tuple(wb)
        rows[key] = rows.get(key, 0j) + coef
    R = len(rows)
    kmax = max(len(k) for k in rows)
    W = np.zeros((R, kmax), dtype=np.complex128)
    klist = np.zeros(R, dtype=np.int32)
    coef = np.zeros(R, dtype=np.complex128)
    for idx, (key, c) in enumerate(rows.items()):
        klist[idx] = len(key)
        W[idx, : len(key)] = key
        coef[idx] = c
    return EstimatorPlan(m, q, W, klist, coef)


def eval_P(z, x: Bits) -> complex:
    """P(z; x) = sum_{i=1}^n x_i z^i (1-based exponents)."""
    n = len(x)
    if isinstance(z, UnitPoint) and z.is_root:
        tab = _cis_table(z.n)
        return _csum(tab[(z.k * i) % z.n] for i in range(1, n + 1) if x[i - 1])
    zc = complex(z)
    acc = 0j
    pw = 1.0 + 0j
    for i in range(1, n + 1):
        pw *= zc
        if x[i - 1]:
            acc += pw
    return acc


def f_chain(trace: Bits, w: Sequence[complex]) -> complex:
    """Chain polynomial of one trace; O(len * k) via the kernel backend."""
    wc = np.asarray([complex(v) for v in w], dtype=np.complex128)
    return complex(backend.f_chain_packed(trace.val, trace.n, wc))


def g_m(trace: Bits, Z: Sequence, params: ChannelParams) -> complex:
    """Unbiased estimator of prod_k P(z_k; y) over the linear channel."""
    Zt = tuple(complex(z) for z in Z)
    plan = build_plan(Zt, params.q)
    return plan.combine(plan.rows_single(trace.val, trace.n))


@dataclass(frozen=True)
class EstimatorQuery:
    """One evaluation point for the circular statistic: order t in {2,3,5}
    and a unit-circle point z. The arc bound |arg z| <= 1/L applies to
    angle-constructed points; exact roots of unity are always admissible
    (the separation search lands on them regardless of the arc)."""

    t: int
    z: UnitPoint
    L: int = 2

    def __post_init__(self):
        if self.t not in (2, 3, 5):
            raise ValueError(f"t must be one of 2, 3, 5, got {self.t}")
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if not self.z.is_root and abs(self.z.arg) > 1.0 / self.L + 1e-15:
            raise ValueError(f"|arg z| = {abs(self.z.arg)} outside arc 1/L = {1.0 / self.L}")

    @property
    def m(self) -> int:
        return self.t + 1


def _h_plan(query: EstimatorQuery, params: ChannelParams) -> EstimatorPlan:
    z = complex(query.z)
    zinv = complex(query.z.pow(-query.t))
    return build_plan((z,) * query.t + (zinv,), params.q)


def h_t(trace: Bits, query: EstimatorQuery, n: int, params: ChannelParams) -> complex:
    """Single-trace unbiased estimator of Q_t(z; x) for the length-n source."""
    plan = _h_plan(query, params)
    pref = n * complex(query.z.pow(query.t * n))
    return pref * plan.combine(plan.rows_single(trace.val, trace.n))


def h_t_average(traces, query: EstimatorQuery, n: int, params: ChannelParams) -> complex:
    """Mean of h_t over a batch, deduplicating repeated traces first."""
    batch = as_batch(traces)
    total = len(batch)
    if total == 0:
        raise EmptyTraceStream("no traces to average")
    vals, lens, counts = batch.unique()
    plan = _h_plan(query, params)
    rows = plan.batch_rows(vals, lens, counts.astype(np.float64))
    pref = n * complex(query.z.pow(query.t * n))
    return pref * plan.combine(rows) / total


def Q_t_exact(z: UnitPoint, x: CircularString, t: int) -> complex:
    """Rotation-summed target sum_j z^{tn} P(z; x^(j))^t P(z^{-t}; x^(j))."""
    n = len(x)
    zinv = z.pow(-t)
    pref = complex(z.pow(t * n))
    terms = []
    for j in range(n):
        xr = x.rotate(j)
        terms.append(eval_P(z, xr) ** t * eval_P(zinv, xr))
    return pref * _csum(terms)


def Q_t_grid(x: CircularString, t: int, points: Sequence[UnitPoint]) -> np.ndarray:
    """Vectorized Q_t over many unit-circle points at once."""
    n = len(x)
    S = len(points)
    zs = np.array([complex(pt) for pt in points], dtype=np.complex128)
    zinvt = np.array([complex(pt.pow(-t)) for pt in points], dtype=np.complex128)
    pref = np.array([complex(pt.pow(t * n)) for pt in points], dtype=np.complex128)
    X = np.array([[x[(j + i) % n] for i in range(n)] for j in range(n)], dtype=np.float64)
    E = np.arange(1, n + 1, dtype=np.float64)[:, None]
    P = X @ (zs[None, :] ** E)
    Pi = X @ (zinvt[None, :] ** E)
    return pref * (P**t * Pi).sum(axis=0)


def default_L(n: int) -> int:
    """max(2, ceil(n^(1/3))) with an exact integer cube root."""
    r = round(n ** (1.0 / 3.0))
    while r**3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return max(2, r if r**3 == n else r + 1)


def default_grid(n: int, t: int) -> int:
    return 64 * (t + 1) * n


def grid_points(n: int, t: int, L: int, G: int) -> list[UnitPoint]:
    """All n-th roots of unity, then G uniform points of the arc |arg| <= 1/L."""
    pts = [UnitPoint.from_index(k, n) for k in range(n)]
    for theta in np.linspace(-1.0 / L, 1.0 / L, G):
        pts.append(UnitPoint.from_angle(float(theta)))
    return pts


@dataclass(frozen=True)
class DistinguishConfig:
    L: int | None = None
    grid: int | None = None
    delta_min: float = 1e-9
    ts: tuple[int, ...] = (2, 3, 5)


@dataclass(frozen=True)
class DistinguishResult:
    verdict: str  # "A" | "B" | "Indistinguishable"
    delta: float
    t: int | None = None
    z: UnitPoint | None = None
    estimate: complex | None = None
    q_a: complex | None = None
    q_b: complex | None = None

    @property
    def winner(self) -> str | None:
        return None if self.verdict == "Indistinguishable" else self.verdict


def as_batch(traces) -> TraceBatch:
    if isinstance(traces, TraceBatch):
        return traces
    return TraceBatch.from_traces([t if isinstance(t, Bits) else Trace.of(t) for t in traces])


def _as_circ(x) -> CircularString:
    return x if isinstance(x, CircularString) else CircularString.of(x)


def _search_best(
    a: CircularString,
    b: CircularString,
    config: DistinguishConfig,
    qcache: dict | None = None,
):
    """Scan the t-grid for the point of largest |Q_t(z;a) - Q_t(z;b)|; first
    point in enumeration order wins ties."""
    n = len(a)
    L = config.L if config.L is not None else default_L(n)
    best = None  # (delta, t, index, point, qa, qb)
    for t in config.ts:
        G = config.grid if config.grid is not None else default_grid(n, t)
        pts = grid_points(n, t, L, G)

        def qvals(x):
            if qcache is None:
                return Q_t_grid(x, t, pts)
            key = (x.val, x.n, t, L, G)
            if key not in qcache:
                qcache[key] = Q_t_grid(x, t, pts)
            return qcache[key]

        qa = qvals(a)
        qb = qvals(b)
        deltas = np.abs(qa - qb)
        i = int(np.argmax(deltas))
        d = float(deltas[i])
        if best is None or d > best[0]:
            best = (d, t, i, pts[i], complex(qa[i]), complex(qb[i]), L)
    return best


def distinguish(
    a,
    b,
    traces,
    params: ChannelParams,
    config: DistinguishConfig | None = None,
    qcache: dict | None = None,
    hcache: dict | None = None,
) -> DistinguishResult:
    """Decide which of two circular candidates produced the trace batch.

    Search phase: maximize |Q_t(z;a) - Q_t(z;b)| over the grid. Below
    delta_min the pair is declared Indistinguishable. Otherwise h_t is
    averaged over the batch at the best point and the verdict is the
    candidate whose exact Q is closer (ties to the smaller canonical).
    """
    config = config or DistinguishConfig()
    a = _as_circ(a)
    b = _as_circ(b)
    if len(a) != len(b):
        raise LengthMismatch(f"candidate lengths {len(a)} != {len(b)}")
    batch = as_batch(traces)
    if len(batch) == 0:
        raise EmptyTraceStream("no traces supplied")
    n = len(a)
    delta, t, _, point, qa, qb, L = _search_best(a, b, config, qcache)
    if delta <= config.delta_min:
        return DistinguishResult(verdict="Indistinguishable", delta=delta)
    query = EstimatorQuery(t=t, z=point, L=L)
    if hcache is not None:
        hkey = (t, point.key())
        if hkey not in hcache:
            hcache[hkey] = h_t_average(batch, query, n, params)
        est = hcache[hkey]
    else:
        est = h_t_average(batch, query, n, params)
    da = abs(est - qa)
    db = abs(est - qb)
    if da < db:
        verdict = "A"
    elif db < da:
        verdict = "B"
    else:
        verdict = "A" if str(a.canonical()) <= str(b.canonical()) else "B"
    return DistinguishResult(verdict=verdict, delta=delta, t=t, z=point, estimate=est, q_a=qa, q_b=qb)


def worst_case_reconstruct(
    n: int,
    traces,
    params: ChannelParams,
    config: DistinguishConfig | None = None,
    candidates: Iterable | None = None,
    qcache: dict | None = None,
) -> CircularString:
    """Round-robin distinguishing tournament; returns the canonical form of
    the candidate that beats every other one.

    ``qcache`` may be shared across calls with the same candidate set: the
    search-phase Q values depend only on the candidates and the grid, so
    repeated experiments skip that phase entirely.
    """
    config = config or DistinguishConfig()
    if candidates is None:
        if n > 8:
            raise InstanceTooLarge(f"full tournament capped at n <= 8, got {n}")
        cands = [CircularString.of(b) for b in necklaces(n)]
    else:
        cands = sorted({_as_circ(c).canonical() for c in candidates})
        if any(len(c) != n for c in cands):
            raise LengthMismatch("candidate length != n")
    if not cands:
        raise NoCondorcetWinner("empty candidate set")
    if len(cands) == 1:
        return cands[0]
    batch = as_batch(traces)
    if len(batch) == 0:
        raise EmptyTraceStream("no traces supplied")
    wins = [0] * len(cands)
    if qcache is None:
        qcache = {}
    hcache: dict = {}
    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            res = distinguish(cands[i], cands[j], batch, params, config, qcache, hcache)
            if res.verdict == "A":
                wins[i] += 1
            elif res.verdict == "B":
                wins[j] += 1
    need = len(cands) - 1
    for i, w in enumerate(wins):
        if w == need:
            return cands[i].canonical()
    raise NoCondorcetWinner(f"max wins {max(wins)} of {need}")


def suggested_trace_count(max_abs_h: float, delta: float, fail_prob: float = 1e-3) -> int:
    """Chernoff-style batch size: enough traces that the h average lands
    within delta/2 of its mean with probability 1 - fail_prob."""
    if delta <= 0 or max_abs_h <= 0 or not 0 < fail_prob < 1:
        raise ValueError("need positive delta, positive bound, fail_prob in (0,1)")
    return math.ceil((2.0 * max_abs_h / delta) ** 2 * math.log(2.0 / fail_prob))

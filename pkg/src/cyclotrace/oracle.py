"""Exact distances, likelihood baselines, and the three-ones lower-bound lab.

The hard pair for average-case lower bounds is x = 1 0^n 1 0^{n+1} 1 0^{n+kk}
against y = 1 0^n 1 0^{n+kk} 1 0^{n+1}: not cyclically equal, yet their trace
laws are so close that distinguishing them needs on the order of (n/log n)^3
traces. Everything here is exact: trace masses of the 1 0^a 1 0^b 1 0^c family
come from a closed form (anchored rotation accounting, no enumeration), the
Hellinger/TV metrics and the Bayes-optimal distinguisher come from the
enumerated law at small n, and the S1/S2 polynomial identities behind the
mass-ratio expansion are checked in exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bits import Bits
from .channel import (
    ChannelParams,
    CircularString,
    ExactTraceDistribution,
    TraceBatch,
    exact_trace_distribution,
)
from .errors import (
    BadArgs,
    InstanceTooLarge,
    LengthMismatch,
    ZeroLikelihoodBoth,
)

# Exact integer binomials below this; log-gamma above (overflow control).
_EXACT_N_CAP = 64


@dataclass(frozen=True)
class ThreeOnesFamily:
    """The lower-bound pair: three ones separated by zero runs of lengths
    (n, n+1, n+kk) for x and (n, n+kk, n+1) for y, read circularly."""

    n: int
    kk: int
    q: float

    def __post_init__(self):
        if self.n < 1:
            raise BadArgs(f"n must be >= 1, got {self.n}")
        if not 2 <= self.kk <= 4:
            raise BadArgs(f"kk must lie in [2, 4], got {self.kk}")
        if self.x.canonical() == self.y.canonical():
            raise BadArgs("x and y are cyclically equal; family is degenerate")

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(self.q)

    @property
    def N(self) -> int:
        """Circle length 3n + kk + 4."""
        return 3 * self.n + self.kk + 4

    @property
    def Z(self) -> int:
        """Zero count 3n + kk + 1."""
        return 3 * self.n + self.kk + 1

    @property
    def x(self) -> CircularString:
        return self._build(self.n, self.n + 1, self.n + self.kk)

    @property
    def y(self) -> CircularString:
        return self._build(self.n, self.n + self.kk, self.n + 1)

    def run_lengths(self, which: str) -> tuple[int, int, int]:
        if which == "X":
            return (self.n, self.n + 1, self.n + self.kk)
        if which == "Y":
            return (self.n, self.n + self.kk, self.n + 1)
        raise BadArgs(f"which must be 'X' or 'Y', got {which!r}")

    @staticmethod
    def _build(g1: int, g2: int, g3: int) -> CircularString:
        return CircularString.of("1" + "0" * g1 + "1" + "0" * g2 + "1" + "0" * g3)

    @staticmethod
    def trace_string(a: int, b: int, c: int) -> Bits:
        """The trace 1 0^a 1 0^b 1 0^c as a bit string."""
        return Bits.from_str("1" + "0" * a + "1" + "0" * b + "1" + "0" * c)


def hellinger(d1: ExactTraceDistribution, d2: ExactTraceDistribution) -> float:
    """(sum over the union of supports of (sqrt(p1) - sqrt(p2))^2)^(1/2)."""
    a, b = d1.as_dict(), d2.as_dict()
    total = math.fsum(
        (math.sqrt(a.get(k, 0.0)) - math.sqrt(b.get(k, 0.0))) ** 2 for k in set(a) | set(b)
    )
    return math.sqrt(total)


def total_variation(d1: ExactTraceDistribution, d2: ExactTraceDistribution) -> float:
    a, b = d1.as_dict(), d2.as_dict()
    return 0.5 * math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b))


def ml_distinguish_oracle(
    a: CircularString,
    b: CircularString,
    traces,
    params: ChannelParams,
) -> str:
    """Bayes-optimal baseline: log-likelihood of the batch under the exact law
    of a versus b; ties go to the smaller canonical rotation.

    Returns "A" or "B" to match the estimator's verdict labels.
    """
    a = CircularString.of(a) if not isinstance(a, CircularString) else a
    b = CircularString.of(b) if not isinstance(b, CircularString) else b
    if len(a) != len(b):
        raise LengthMismatch(f"|a|={len(a)} vs |b|={len(b)}")
    da = exact_trace_distribution(a, params).as_dict()
    db = exact_trace_distribution(b, params).as_dict()
    batch = traces if isinstance(traces, TraceBatch) else TraceBatch.from_traces(list(traces))
    lla = 0.0
    llb = 0.0
    vals, lens, counts = batch.unique()
    for v, l, m in zip(vals.tolist(), lens.tolist(), counts.tolist()):
        key = format(v, f"0{l}b") if l else ""
        pa = da.get(key, 0.0)
        pb = db.get(key, 0.0)
        if pa == 0.0 and pb == 0.0:
            raise ZeroLikelihoodBoth(f"trace {key!r} impossible under both strings")
        lla += m * math.log(pa) if pa > 0.0 else -math.inf
        llb += m * math.log(pb) if pb > 0.0 else -math.inf
    if lla > llb:
        return "A"
    if llb > lla:
        return "B"
    return "A" if str(a.canonical()) <= str(b.canonical()) else "B"


def _log_comb(top: int, bot: int) -> float:
    if bot < 0 or bot > top:
        return -math.inf
    return math.lgamma(top + 1) - math.lgamma(bot + 1) - math.lgamma(top - bot + 1)


def _check_triple(fam: ThreeOnesFamily, a: int, b: int, c: int) -> None:
    hi = fam.n + fam.kk
    for v in (a, b, c):
        if not 0 <= v <= hi:
            raise BadArgs(f"gap {v} outside [0, n+kk={hi}]")


def three_ones_prob(fam: ThreeOnesFamily, which: str, a: int, b: int, c: int) -> float:
    """Exact trace mass of 1 0^a 1 0^b 1 0^c.

    Summing the channel over anchor choices: the trace starts at a retained 1,
    so either the rotation point sits on one of the three ones, or it sits in
    the zero run circularly before that 1 and everything from the point to the
    1 is deleted. Collapsing the in-run positions with the Pascal identity
    sum_t C(L-t, c) = C(L, c+1) gives, per anchor m (run lengths L cyclic),

        C(L_m, a) C(L_{m+1}, b) C(L_{m+2} + 1, c + 1)

    and the mass is (1-q)^3/N times q^(Z-a-b-c) p^(a+b+c) times the sum over
    the three anchors. Exact integer binomials at small n, log-gamma above.
    """
    _check_triple(fam, a, b, c)
    L = fam.run_lengths(which)
    q, p = fam.q, 1.0 - fam.q
    s = a + b + c
    if fam.n < _EXACT_N_CAP or q == 0.0:
        bracket = sum(
            math.comb(L[m], a) * math.comb(L[(m + 1) % 3], b) * math.comb(L[(m + 2) % 3] + 1, c + 1)
            for m in range(3)
        )
        return (p**3 / fam.N) * q ** (fam.Z - s) * p**s * bracket
    base = 3.0 * math.log(p) - math.log(fam.N) + (fam.Z - s) * math.log(q) + s * math.log(p)
    terms = [
        _log_comb(L[m], a) + _log_comb(L[(m + 1) % 3], b) + _log_comb(L[(m + 2) % 3] + 1, c + 1)
        for m in range(3)
    ]
    return math.fsum(math.exp(base + t) for t in terms if t > -math.inf)


def gap_profile_weight(fam: ThreeOnesFamily, which: str, a: int, b: int, c: int) -> float:
    """The unanchored gap-profile weight

        q^(Z-a-b-c) (1-q)^(a+b+c) * sum_m C(L_m, a) C(L_{m+1}, b) C(L_{m+2}, c).

    Not a trace mass (it ignores the rotation anchor and the retention of the
    ones; summed over all gaps it is exactly 3, one per anchor), but its X/Y
    ratio is the S1/S2 quantity the mass-ratio expansion works with.
    """
    _check_triple(fam, a, b, c)
    L = fam.run_lengths(which)
    q, p = fam.q, 1.0 - fam.q
    s = a + b + c
    if fam.n < _EXACT_N_CAP or q == 0.0:
        bracket = sum(
            math.comb(L[m], a) * math.comb(L[(m + 1) % 3], b) * math.comb(L[(m + 2) % 3], c)
            for m in range(3)
        )
        return q ** (fam.Z - s) * p**s * bracket
    base = (fam.Z - s) * math.log(q) + s * math.log(p)
    terms = [
        _log_comb(L[m], a) + _log_comb(L[(m + 1) % 3], b) + _log_comb(L[(m + 2) % 3], c)
        for m in range(3)
    ]
    return math.fsum(math.exp(base + t) for t in terms if t > -math.inf)


def _removed_ones_string(x: CircularString, positions: list[int], drop: tuple[int, ...]) -> CircularString:
    dropped = {positions[i] for i in drop}
    return CircularString.of(Bits.from_bits(b for i, b in enumerate(x) if i not in dropped))


def conditional_equidistribution_check(fam: ThreeOnesFamily) -> bool:
    """Deleted-ones pairing between the two strings.

    For every nonempty subset of x's ones, removing them from the circle must
    leave a string cyclically equal to y with the paired subset removed
    (first and second ones swap roles, the third pairs with itself), and the
    exact trace laws of the reduced strings must agree entry by entry. This is
    the content of the claim that conditioned on which ones survive, traces of
    x and y are identically distributed.
    """
    if fam.N > 20:
        raise InstanceTooLarge(f"exact path needs 3n+kk+4 <= 20, got {fam.N}")
    sigma = {0: 1, 1: 0, 2: 2}
    x, y = fam.x, fam.y
    ones_x = [i for i in range(len(x)) if x[i] == 1]
    ones_y = [i for i in range(len(y)) if y[i] == 1]
    subsets = [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
    for sub in subsets:
        xs = _removed_ones_string(x, ones_x, sub)
        ys = _removed_ones_string(y, ones_y, tuple(sigma[i] for i in sub))
        if xs.canonical() != ys.canonical():
            return False
        dx = exact_trace_distribution(xs, fam.params).as_dict()
        dy = exact_trace_distribution(ys, fam.params).as_dict()
        for key in set(dx) | set(dy):
            if abs(dx.get(key, 0.0) - dy.get(key, 0.0)) > 1e-12:
                return False
    return True


def _s1(n: int, kk: int, a: int, b: int, c: int) -> int:
    def full(u):
        out = 1
        for i in range(1, kk + 1):
            out *= n + i - u
        return out

    def tail(u):
        out = 1
        for i in range(2, kk + 1):
            out *= n + i - u
        return out

    return full(a) * tail(b) + full(b) * tail(c) + full(c) * tail(a)


def _s2(n: int, kk: int, a: int, b: int, c: int) -> int:
    def full(u):
        out = 1
        for i in range(1, kk + 1):
            out *= n + i - u
        return out

    def tail(u):
        out = 1
        for i in range(2, kk + 1):
            out *= n + i - u
        return out

    return full(b) * tail(a) + full(c) * tail(b) + full(a) * tail(c)


def s1_minus_s2(n: int, kk: int, a: int, b: int, c: int) -> int:
    """Closed form of the alternating difference:

        (b-a) Pi_ab + (c-b) Pi_bc + (a-c) Pi_ca,
        Pi_uv = prod_{i=2..kk} (n+i-u)(n+i-v).
    """

    def pi(u, v):
        out = 1
        for i in range(2, kk + 1):
            out *= (n + i - u) * (n + i - v)
        return out

    return (b - a) * pi(a, b) + (c - b) * pi(b, c) + (a - c) * pi(c, a)


def s1_s2_antisymmetry_check(n: int, kk: int, samples) -> bool:
    """Exact-arithmetic property suite for S1 - S2 on the given triples.

    Checks, per triple: the closed form equals the direct product expansion;
    transpositions flip the sign; equal arguments force zero; and on distinct
    triples the Vandermonde factor (a-b)(b-c)(a-c) divides exactly, with a
    transposition-invariant quotient.
    """
    for a, b, c in samples:
        val = s1_minus_s2(n, kk, a, b, c)
        if val != _s1(n, kk, a, b, c) - _s2(n, kk, a, b, c):
            return False
        for sa, sb, sc in ((b, a, c), (a, c, b), (c, b, a)):
            if s1_minus_s2(n, kk, sa, sb, sc) != -val:
                return False
        if (a == b or b == c or a == c) and val != 0:
            return False
        if a != b and b != c and a != c:
            denom = (a - b) * (b - c) * (a - c)
            quot, rem = divmod(val, denom)
            if rem != 0:
                return False
            sval = s1_minus_s2(n, kk, b, a, c)
            sdenom = (b - a) * (a - c) * (b - c)
            if sval // sdenom != quot or sval % sdenom != 0:
                return False
    return True


def _comb_table(length: int, count: int) -> np.ndarray:
    """C(length, j) for j in [0, count) as float64."""
    return np.array([math.comb(length, j) if j <= length else 0 for j in range(count)], dtype=float)


def _mass_grid(fam: ThreeOnesFamily, which: str) -> np.ndarray:
    """Exact masses of 1 0^a 1 0^b 1 0^c for all gaps in [0, n+kk]^3."""
    L = fam.run_lengths(which)
    M = fam.n + fam.kk + 1
    q, p = fam.q, 1.0 - fam.q
    bracket = np.zeros((M, M, M))
    for m in range(3):
        ta = _comb_table(L[m], M)
        tb = _comb_table(L[(m + 1) % 3], M)
        # anchored run: C(L+1, c+1), the Pascal-collapsed rotation-point sum
        tc = np.array([math.comb(L[(m + 2) % 3] + 1, j + 1) for j in range(M)], dtype=float)
        bracket += np.einsum("a,b,c->abc", ta, tb, tc)
    idx = np.arange(M)
    s = idx[:, None, None] + idx[None, :, None] + idx[None, None, :]
    if q == 0.0:
        pow_grid = np.where(s == fam.Z, 1.0, 0.0) * p**s
    else:
        pow_grid = np.exp((fam.Z - s) * math.log(q) + s * math.log(p))
    return (p**3 / fam.N) * pow_grid * bracket


@dataclass(frozen=True)
class ThreeOnesDistances:
    """Both flavors of squared distance over the three-ones trace family:
    ``dsq_paper`` sums (mu - nu)^2, ``dsq_hellinger`` sums
    (sqrt(mu) - sqrt(nu))^2. ``family_mass`` is the total mass of the family
    (identical for both strings); dividing ``dsq_hellinger`` by it gives the
    squared Hellinger distance between the conditional laws given a
    three-ones trace, which is the per-trace distinguishing signal and decays
    at the n^-3 rate the sample lower bound rests on."""

    dsq_paper: float
    dsq_hellinger: float
    family_mass: float


def hellinger_three_ones(fam: ThreeOnesFamily) -> ThreeOnesDistances:
    """Closed-form restricted distances over traces 1 0^a 1 0^b 1 0^c,
    0 <= a,b,c <= n+kk; no trace enumeration, so large n is fine."""
    mu = _mass_grid(fam, "X")
    nu = _mass_grid(fam, "Y")
    dsq_paper = float(((mu - nu) ** 2).sum())
    dsq_hell = float(((np.sqrt(mu) - np.sqrt(nu)) ** 2).sum())
    return ThreeOnesDistances(dsq_paper=dsq_paper, dsq_hellinger=dsq_hell, family_mass=float(mu.sum()))


def sample_lower_bound(dH2: float, eps: float) -> int:
    """floor(log(1/eps) / (9 dH2)): any distinguisher with failure probability
    at most eps needs more than this many traces."""
    if not dH2 > 0.0:
        raise BadArgs(f"dH2 must be positive, got {dH2}")
    if not 0.0 < eps < 1.0:
        raise BadArgs(f"eps must lie in (0, 1), got {eps}")
    return int(math.floor(math.log(1.0 / eps) / (9.0 * dH2)))

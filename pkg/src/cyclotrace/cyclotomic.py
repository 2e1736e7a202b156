"""Root-of-unity separation and the ratio-condition verifier.

At an n-th root of unity ω^k the quantity f_t(x) = P(ω^k;x)^t P(ω^{-tk};x)
is invariant under rotation of x (rotating x multiplies P(ω^k;·) by a phase
ω^{-kj} and P(ω^{-tk};·) by the inverse phase to the t-th power), so unequal
f_t values certify that two strings are not cyclic shifts. find_separating_root
hunts for such a certificate with t picked per k as the smallest prime not
dividing n/gcd(n,k).

The converse direction asks when the certificate is complete: does every
non-rotation pair get separated by some (k, rule-t)? verify_theorem_nt
brute-forces the answer over all canonical pairs; completeness holds exactly
when n has at most two prime factors. check_ratio_condition is the related
(strictly weaker) per-k test of whether P(ω^k;a) and P(ω^k;b) agree up to a
factor ω^c, and counterexample() builds, for n = a*b*c with three factors,
an explicit pair that passes every ratio condition and defeats every
certificate without being rotations of each other.

Everything here is numeric at double precision: "zero" means modulus below
1e-9. At n <= 12 the smallest nonzero modulus that ever appears is orders of
magnitude larger, so the thresholds are safe (the test suite measures this).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .bits import Bits, necklaces
from .channel import CircularString
from .errors import BadFactors, CyclotraceError, InstanceTooLarge, NotFound
from .estimator import UnitPoint, eval_P

ZERO_TOL = 1e-9

VERIFY_CAP = 12


def root_of_unity(k: int, n: int) -> UnitPoint:
    """Exact-index point e^(2 pi i k / n), index reduced mod n."""
    if n < 1:
        raise ValueError("order must be >= 1")
    return UnitPoint.from_index(k, n)


def _rule_t(n: int, k: int) -> int | None:
    """Smallest prime not dividing n/gcd(n,k); 2 for k=0. None if above 5
    (needs n/gcd divisible by 30, impossible for n < 30)."""
    if k == 0:
        return 2
    d = n // math.gcd(n, k)
    for t in (2, 3, 5):
        if d % t:
            return t
    return None


def _f_t_at_root(x: Bits, k: int, t: int, n: int) -> complex:
    return eval_P(root_of_unity(k, n), x) ** t * eval_P(root_of_unity(-t * k, n), x)


def find_separating_root(a, b) -> tuple[int, int]:
    """First (k, t) whose rotation-invariant f_t differs between a and b.

    Scans k = 0..n-1 in order with t fixed by _rule_t. Raises NotFound when
    nothing separates, which for n with at most two prime factors happens
    exactly when a and b are cyclic shifts.
    """
    a = CircularString.of(a) if not isinstance(a, Bits) else a
    b = CircularString.of(b) if not isinstance(b, Bits) else b
    n = len(a)
    if len(b) != n:
        raise ValueError(f"lengths differ: {n} vs {len(b)}")
    for k in range(n):
        t = _rule_t(n, k)
        if t is None:
            continue
        if abs(_f_t_at_root(a, k, t, n) - _f_t_at_root(b, k, t, n)) > ZERO_TOL:
            return k, t
    raise NotFound("no separating root-of-unity point")


def check_ratio_condition(a, b, k: int) -> bool:
    """True iff P(ω^k;a) = ω^c P(ω^k;b) for some integer c (or both vanish)."""
    a = CircularString.of(a) if not isinstance(a, Bits) else a
    b = CircularString.of(b) if not isinstance(b, Bits) else b
    n = len(a)
    if len(b) != n:
        raise ValueError(f"lengths differ: {n} vs {len(b)}")
    z = root_of_unity(k, n)
    pa = eval_P(z, a)
    pb = eval_P(z, b)
    return _ratio_ok(pa, pb, n)


def _ratio_ok(pa: complex, pb: complex, n: int) -> bool:
    if abs(pa) < ZERO_TOL and abs(pb) < ZERO_TOL:
        return True
    if abs(pa) < ZERO_TOL or abs(pb) < ZERO_TOL:
        return False
    # phase quotient pins down the only viable c; recheck the neighbors in
    # case the rounded angle sits on a boundary
    c0 = round(n * (cmath.phase(pa) - cmath.phase(pb)) / (2.0 * math.pi))
    tab = [complex(UnitPoint.from_index(c, n)) for c in range(n)]
    for dc in (0, 1, -1):
        c = (c0 + dc) % n
        if abs(pa - tab[c] * pb) < ZERO_TOL:
            return True
    if abs(abs(pa) - abs(pb)) < ZERO_TOL:
        return any(abs(pa - w * pb) < ZERO_TOL for w in tab)
    return False


@dataclass(frozen=True)
class NtResult:
    """Outcome of the exhaustive ratio-condition scan for one n."""

    holds: bool
    witness: tuple[CircularString, CircularString] | None = None

    def __bool__(self) -> bool:
        return self.holds


def verify_theorem_nt(n: int, threads: int | None = None) -> NtResult:
    """Exhaustively confirm that the f_t certificate is complete at length n.

    Scans every unordered pair of distinct canonical strings and asks whether
    some (k, rule-t) point separates them, i.e. whether find_separating_root
    would succeed. Returns holds=True when every non-cyclic pair has a
    certificate; otherwise the first certificate-free pair in canonical order
    is the witness. Witnesses also satisfy the per-k ratio condition at every
    k (the test suite asserts this), which is what makes them invisible to
    any statistic built from P values at roots of unity with the rule-t
    pairing.

    The outcome depends on the prime signature of n: with at most two prime
    factors (counted with multiplicity) every pair is certified, while
    n = 8 = 2^3 and n = 12 = 2^2*3 admit certificate-free pairs such as the
    counterexample() construction. Note the weaker per-k ratio condition
    alone is NOT rigid at n = 2p: 001011 and its reversal 001101 satisfy it
    at every k with exact phases yet are not rotations; the t-power statistic
    with t chosen coprime to the point's order is what restores rigidity, so
    that is what this scan verifies.
    """
    if n > VERIFY_CAP:
        raise InstanceTooLarge(f"pair scan capped at n <= {VERIFY_CAP}, got {n}")
    cands = necklaces(n)
    evals = [[eval_P(root_of_unity(k, n), x) for k in range(n)] for x in cands]
    rule = [_rule_t(n, k) for k in range(n)]

    def pair_is_witness(i: int, j: int) -> bool:
        ea, eb = evals[i], evals[j]
        for k in range(n):
            t = rule[k]
            if t is None:
                continue
            kk = (-t * k) % n
            if abs(ea[k] ** t * ea[kk] - eb[k] ** t * eb[kk]) > ZERO_TOL:
                return False
        return True

    m = len(cands)
    nthreads = 1
    if threads is not None:
        from .channel import resolve_threads

        nthreads = resolve_threads(threads)
    if nthreads > 1:
        from concurrent.futures import ThreadPoolExecutor

        def scan_row(i: int):
            for j in range(i + 1, m):
                if pair_is_witness(i, j):
                    return (i, j)
            return None

        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            for hit in pool.map(scan_row, range(m)):
                if hit is not None:
                    i, j = hit
                    return NtResult(False, (CircularString.of(cands[i]), CircularString.of(cands[j])))
        return NtResult(True)
    for i in range(m):
        for j in range(i + 1, m):
            if pair_is_witness(i, j):
                return NtResult(False, (CircularString.of(cands[i]), CircularString.of(cands[j])))
    return NtResult(True)


def _indicator(positions: set[int], n: int) -> CircularString:
    val = 0
    for i in range(n):
        val = (val << 1) | (1 if i in positions else 0)
    return CircularString(n, val)


def counterexample(a: int, b: int, c: int) -> tuple[CircularString, CircularString]:
    """Two non-rotation-equal strings of length n = a*b*c passing every
    ratio condition.

    Position sets (index 0 is the leftmost bit):
        A = {1, a+1, ..., ab-a+1} ∪ {a, ab+a, ..., abc-ab+a}
        B = {1, a+1, ..., ab-a+1} ∪ {0, ab, ..., abc-ab}
    The pair satisfies, as plain integer polynomials with P = sum_{i in A} x^i
    and Q = sum_{i in B} x^i:
        P(x) - Q(x)     = (x^a - 1) * (x^{abc} - 1)/(x^{ab} - 1)
        P(x) - x^a Q(x) = x (1 - x^{ab})
    All three postconditions (non-equality, ratio conditions, identities) are
    re-verified on every call.
    """
    if min(a, b, c) <= 1:
        raise BadFactors(f"need all factors >= 2, got ({a}, {b}, {c})")
    n = a * b * c
    common = {1 + a * i for i in range(b)}
    setA = common | {a + a * b * j for j in range(c)}
    setB = common | {a * b * j for j in range(c)}
    x = _indicator(setA, n)
    y = _indicator(setB, n)
    checks = counterexample_checks(a, b, c, x, y)
    bad = [name for name, ok in checks.items() if not ok]
    if bad:
        raise CyclotraceError(f"construction self-check failed: {bad}")
    return x, y


def counterexample_checks(a: int, b: int, c: int, x: CircularString, y: CircularString) -> dict[str, bool]:
    """The three postconditions of counterexample(), individually."""
    n = a * b * c
    not_equal = str(x.canonical()) != str(y.canonical())
    ratio_all_k = all(check_ratio_condition(x, y, k) for k in range(n))

    # plain-polynomial identities on exponent -> coefficient maps
    P: dict[int, int] = {}
    Q: dict[int, int] = {}
    for i in range(n):
        if x[i]:
            P[i] = P.get(i, 0) + 1
        if y[i]:
            Q[i] = Q.get(i, 0) + 1

    def sub(u: dict[int, int], v: dict[int, int]) -> dict[int, int]:
        out = dict(u)
        for e, co in v.items():
            out[e] = out.get(e, 0) - co
            if out[e] == 0:
                del out[e]
        return out

    def shift(u: dict[int, int], s: int) -> dict[int, int]:
        return {e + s: co for e, co in u.items()}

    rhs1: dict[int, int] = {}
    for j in range(c):
        rhs1[a + a * b * j] = rhs1.get(a + a * b * j, 0) + 1
        rhs1[a * b * j] = rhs1.get(a * b * j, 0) - 1
    rhs1 = {e: co for e, co in rhs1.items() if co}
    identity1 = sub(P, Q) == rhs1
    identity2 = sub(P, shift(Q, a)) == {1: 1, 1 + a * b: -1}
    return {
        "not_cyclically_equal": not_equal,
        "ratio_condition_all_k": ratio_all_k,
        "polynomial_identities": identity1 and identity2,
    }

"""Lower-bound laboratory: the three-ones family, exact trace masses,
distances, the ML baseline, and the S1/S2 algebra."""

import math
import random

import pytest

from cyclotrace.channel import ChannelParams, CircularString, Trace, exact_trace_distribution, generate_traces
from cyclotrace.errors import BadArgs, InstanceTooLarge, LengthMismatch, ZeroLikelihoodBoth
from cyclotrace.oracle import (
    ThreeOnesFamily,
    conditional_equidistribution_check,
    gap_profile_weight,
    hellinger,
    hellinger_three_ones,
    ml_distinguish_oracle,
    s1_minus_s2,
    s1_s2_antisymmetry_check,
    sample_lower_bound,
    three_ones_prob,
    total_variation,
)


def all_triples(fam: ThreeOnesFamily):
    M = fam.n + fam.kk
    for a in range(M + 1):
        for b in range(M + 1):
            for c in range(M + 1):
                yield a, b, c


def falling(n: int, kk: int, u: int, start: int) -> int:
    out = 1
    for i in range(start, kk + 1):
        out *= n + i - u
    return out


class TestFamily:
    def test_shape(self):
        fam = ThreeOnesFamily(1, 2, 0.3)
        assert str(fam.x) == "101001000"
        assert str(fam.y) == "101000100"
        assert fam.N == 9 == len(fam.x)
        assert fam.Z == 6
        assert fam.run_lengths("X") == (1, 2, 3)
        assert fam.run_lengths("Y") == (1, 3, 2)

    def test_pair_not_cyclically_equal(self):
        for n in (1, 2, 5):
            for kk in (2, 3, 4):
                fam = ThreeOnesFamily(n, kk, 0.3)
                assert fam.x.canonical() != fam.y.canonical()

    def test_rejects_bad_parameters(self):
        with pytest.raises(BadArgs):
            ThreeOnesFamily(0, 2, 0.3)
        with pytest.raises(BadArgs):
            ThreeOnesFamily(3, 5, 0.3)
        with pytest.raises(BadArgs):
            ThreeOnesFamily(3, 1, 0.3)

    def test_run_lengths_bad_label(self):
        with pytest.raises(BadArgs):
            ThreeOnesFamily(2, 2, 0.3).run_lengths("Z")

    def test_trace_string(self):
        assert str(ThreeOnesFamily.trace_string(1, 0, 2)) == "101100"
        assert str(ThreeOnesFamily.trace_string(0, 0, 0)) == "111"


class TestThreeOnesProb:
    @pytest.mark.parametrize("kk", [2, 3, 4])
    @pytest.mark.parametrize("q", [0.3, 0.5])
    def test_matches_exact_law(self, kk, q):
        for n in (1, 2):
            fam = ThreeOnesFamily(n, kk, q)
            for which, string in (("X", fam.x), ("Y", fam.y)):
                law = exact_trace_distribution(string, fam.params).as_dict()
                for a, b, c in all_triples(fam):
                    key = str(ThreeOnesFamily.trace_string(a, b, c))
                    assert three_ones_prob(fam, which, a, b, c) == pytest.approx(
                        law.get(key, 0.0), abs=1e-14
                    ), (n, which, a, b, c)

    def test_rejects_out_of_range_gap(self):
        fam = ThreeOnesFamily(2, 2, 0.3)
        with pytest.raises(BadArgs):
            three_ones_prob(fam, "X", 5, 0, 0)
        with pytest.raises(BadArgs):
            three_ones_prob(fam, "X", 0, -1, 0)

    def test_large_n_logspace_continuous(self):
        """The log-gamma branch must agree with exact binomials where both
        apply; compare a mid-size family against integer arithmetic."""
        fam = ThreeOnesFamily(40, 2, 0.3)
        L = fam.run_lengths("X")
        q, p = 0.3, 0.7
        for a, b, c in ((3, 7, 11), (0, 0, 42), (20, 20, 20)):
            s = a + b + c
            bracket = sum(
                math.comb(L[m], a)
                * math.comb(L[(m + 1) % 3], b)
                * math.comb(L[(m + 2) % 3] + 1, c + 1)
                for m in range(3)
            )
            expect = (p**3 / fam.N) * q ** (fam.Z - s) * p**s * bracket
            assert three_ones_prob(fam, "X", a, b, c) == pytest.approx(expect, rel=1e-10)


class TestGapProfileWeight:
    @pytest.mark.parametrize("kk", [2, 3])
    def test_total_weight_is_three(self, kk):
        """One unit per anchor: the unanchored weights sum to exactly 3."""
        for n in (1, 3):
            fam = ThreeOnesFamily(n, kk, 0.35)
            for which in ("X", "Y"):
                total = math.fsum(gap_profile_weight(fam, which, *t) for t in all_triples(fam))
                assert total == pytest.approx(3.0, abs=1e-12)

    def test_ratio_is_s1_over_s2(self):
        """X/Y weight ratio equals S1/S2 with the falling-product expansion."""
        fam = ThreeOnesFamily(4, 3, 0.3)
        n, kk = fam.n, fam.kk
        for a, b, c in ((1, 2, 3), (0, 4, 2), (2, 2, 5), (7, 0, 1)):
            s1 = (
                falling(n, kk, a, 1) * falling(n, kk, b, 2)
                + falling(n, kk, b, 1) * falling(n, kk, c, 2)
                + falling(n, kk, c, 1) * falling(n, kk, a, 2)
            )
            s2 = (
                falling(n, kk, b, 1) * falling(n, kk, a, 2)
                + falling(n, kk, c, 1) * falling(n, kk, b, 2)
                + falling(n, kk, a, 1) * falling(n, kk, c, 2)
            )
            gx = gap_profile_weight(fam, "X", a, b, c)
            gy = gap_profile_weight(fam, "Y", a, b, c)
            assert gx / gy == pytest.approx(s1 / s2, abs=1e-12)


class TestS1S2:
    def test_known_value(self):
        assert s1_minus_s2(5, 3, 1, 2, 4) == 468

    def test_matches_independent_expansion(self):
        n, kk = 5, 3
        for a, b, c in ((1, 2, 4), (0, 3, 7), (2, 2, 2), (6, 1, 0)):
            s1 = (
                falling(n, kk, a, 1) * falling(n, kk, b, 2)
                + falling(n, kk, b, 1) * falling(n, kk, c, 2)
                + falling(n, kk, c, 1) * falling(n, kk, a, 2)
            )
            s2 = (
                falling(n, kk, b, 1) * falling(n, kk, a, 2)
                + falling(n, kk, c, 1) * falling(n, kk, b, 2)
                + falling(n, kk, a, 1) * falling(n, kk, c, 2)
            )
            assert s1_minus_s2(n, kk, a, b, c) == s1 - s2

    def test_property_suite_on_random_triples(self):
        rng = random.Random(99)
        for n, kk in ((3, 2), (5, 3), (8, 4)):
            hi = n + kk
            samples = [
                (rng.randint(0, hi), rng.randint(0, hi), rng.randint(0, hi)) for _ in range(1000)
            ]
            samples += [(2, 2, 2), (0, 0, hi), (hi, hi, 0)]
            assert s1_s2_antisymmetry_check(n, kk, samples)

    def test_equal_coordinates_vanish(self):
        assert s1_minus_s2(6, 2, 3, 3, 3) == 0
        assert s1_minus_s2(6, 4, 0, 0, 0) == 0


class TestConditionalEquidistribution:
    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("kk", [2, 4])
    def test_holds_small(self, n, kk):
        assert conditional_equidistribution_check(ThreeOnesFamily(n, kk, 0.3))

    def test_size_cap(self):
        with pytest.raises(InstanceTooLarge):
            conditional_equidistribution_check(ThreeOnesFamily(6, 2, 0.3))


class TestDistances:
    def test_identical_distributions(self):
        params = ChannelParams(q=0.4)
        d = exact_trace_distribution(CircularString.of("101"), params)
        assert hellinger(d, d) == 0.0
        assert total_variation(d, d) == 0.0

    def test_disjoint_supports(self):
        params = ChannelParams(q=0.0)
        d1 = exact_trace_distribution(CircularString.of("1"), params)
        d0 = exact_trace_distribution(CircularString.of("0"), params)
        assert hellinger(d1, d0) == pytest.approx(math.sqrt(2.0))
        assert total_variation(d1, d0) == pytest.approx(1.0)

    def test_half_overlap(self):
        d1 = exact_trace_distribution(CircularString.of("1"), ChannelParams(q=0.0))
        dh = exact_trace_distribution(CircularString.of("1"), ChannelParams(q=0.5))
        assert hellinger(d1, dh) == pytest.approx(math.sqrt(2.0 - math.sqrt(2.0)))
        assert total_variation(d1, dh) == pytest.approx(0.5)


class TestMlOracle:
    def test_consistent_on_planted_truth(self):
        params = ChannelParams(q=0.3)
        a = generate_traces(CircularString.of("1100"), params, 5_000, seed=61)
        assert ml_distinguish_oracle("1100", "1010", a, params) == "A"
        b = generate_traces(CircularString.of("1010"), params, 5_000, seed=62)
        assert ml_distinguish_oracle("1100", "1010", b, params) == "B"

    def test_tie_goes_to_smaller_canonical(self):
        """The empty trace is equally likely under both candidates."""
        params = ChannelParams(q=0.5)
        assert ml_distinguish_oracle("1100", "1010", [Trace.of("")], params) == "A"
        assert ml_distinguish_oracle("1010", "1100", [Trace.of("")], params) == "B"

    def test_impossible_trace(self):
        params = ChannelParams(q=0.5)
        with pytest.raises(ZeroLikelihoodBoth):
            ml_distinguish_oracle("1100", "1010", [Trace.of("111")], params)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            ml_distinguish_oracle("110", "1100", [Trace.of("1")], ChannelParams(q=0.5))

    def test_one_sided_zero_likelihood_decides(self):
        """A trace with three adjacent ones rules out the alternating string."""
        params = ChannelParams(q=0.5)
        assert ml_distinguish_oracle("111000", "101010", [Trace.of("111")], params) == "A"


class TestHellingerThreeOnes:
    @pytest.mark.parametrize("kk", [2, 3])
    def test_matches_restricted_enumeration(self, kk):
        fam = ThreeOnesFamily(2, kk, 0.4)
        lawx = exact_trace_distribution(fam.x, fam.params).as_dict()
        lawy = exact_trace_distribution(fam.y, fam.params).as_dict()
        dsq = hell = mass = 0.0
        for a, b, c in all_triples(fam):
            key = str(ThreeOnesFamily.trace_string(a, b, c))
            mu = lawx.get(key, 0.0)
            nu = lawy.get(key, 0.0)
            dsq += (mu - nu) ** 2
            hell += (math.sqrt(mu) - math.sqrt(nu)) ** 2
            mass += mu
        d = hellinger_three_ones(fam)
        assert d.dsq_paper == pytest.approx(dsq, rel=1e-12, abs=1e-18)
        assert d.dsq_hellinger == pytest.approx(hell, rel=1e-12, abs=1e-15)
        assert d.family_mass == pytest.approx(mass, rel=1e-12)

    def test_family_mass_same_for_both_strings(self):
        """x and y share the run-length multiset, so the total three-ones
        mass agrees; the closed form must reproduce the Y-side sum too."""
        fam = ThreeOnesFamily(3, 2, 0.45)
        mass_y = math.fsum(three_ones_prob(fam, "Y", *t) for t in all_triples(fam))
        assert hellinger_three_ones(fam).family_mass == pytest.approx(mass_y, rel=1e-13)

    def test_rotation_only_channel(self):
        """At q = 0 each string has exactly three surviving rotations and the
        supports are disjoint, giving closed forms in N alone."""
        for n, kk in ((1, 2), (3, 3)):
            fam = ThreeOnesFamily(n, kk, 0.0)
            d = hellinger_three_ones(fam)
            assert d.dsq_paper == pytest.approx(6.0 / fam.N**2, rel=1e-14)
            assert d.dsq_hellinger == pytest.approx(6.0 / fam.N, rel=1e-14)
            assert d.family_mass == pytest.approx(3.0 / fam.N, rel=1e-14)

    def test_decays_with_n(self):
        vals = [hellinger_three_ones(ThreeOnesFamily(n, 2, 0.5)).dsq_hellinger for n in (8, 16, 32)]
        assert vals[0] > vals[1] > vals[2]


class TestSampleLowerBound:
    def test_unit_case(self):
        assert sample_lower_bound(1.0 / 9.0, 1.0 / math.e) == 1

    def test_weak_failure_probability_gives_zero(self):
        assert sample_lower_bound(1.0 / 9.0, 0.99) == 0

    def test_smaller_distance_needs_more(self):
        assert sample_lower_bound(1e-6, 0.01) > sample_lower_bound(1e-3, 0.01)

    def test_grows_with_n(self):
        bounds = []
        for n in (8, 16, 32, 64):
            d = hellinger_three_ones(ThreeOnesFamily(n, 2, 0.5))
            bounds.append(sample_lower_bound(d.dsq_hellinger / d.family_mass, 0.05))
        assert bounds == sorted(bounds)
        assert bounds[-1] > bounds[0] * 8

    def test_rejects_bad_arguments(self):
        with pytest.raises(BadArgs):
            sample_lower_bound(0.0, 0.1)
        with pytest.raises(BadArgs):
            sample_lower_bound(0.1, 1.0)

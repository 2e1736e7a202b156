"""Channel model: sampling, the exact law oracle, padding, serialization."""

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclotrace.bits import Bits, all_bits
from cyclotrace.channel import (
    ChannelParams,
    CircularString,
    Trace,
    TraceBatch,
    exact_trace_distribution,
    generate_trace,
    generate_traces,
    pad_linear,
    unpad,
)
from cyclotrace.errors import BadArgs, BadLength, InstanceTooLarge, PadNotUnique

from conftest import all_strings, law_close, naive_trace_law


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class TestChannelParams:
    def test_p_is_exact_complement(self):
        for q in (0.0, 0.25, 0.3, 0.9):
            params = ChannelParams(q=q)
            assert params.p == 1.0 - q
            assert params.p + params.q == 1.0

    def test_rejects_out_of_range(self):
        for q in (-0.1, 1.0, 1.5):
            with pytest.raises(BadArgs):
                ChannelParams(q=q)

    def test_zero_deletion_allowed(self):
        assert ChannelParams(q=0.0).p == 1.0


class TestGenerateTrace:
    def test_pure_rotation_at_q_zero(self):
        x = CircularString.of("0110")
        rng = rng_for(1)
        seen = {str(generate_trace(x, ChannelParams(q=0.0), rng)) for _ in range(200)}
        assert seen == {"0110", "1100", "1001", "0011"}

    def test_single_bit_law(self):
        x = CircularString.of("1")
        rng = rng_for(2)
        counts = Counter(str(generate_trace(x, ChannelParams(q=0.5), rng)) for _ in range(4000))
        assert set(counts) == {"", "1"}
        assert abs(counts["1"] / 4000 - 0.5) < 0.05

    def test_trace_never_longer_than_source(self):
        x = CircularString.of("10110")
        rng = rng_for(3)
        params = ChannelParams(q=0.7)
        assert all(len(generate_trace(x, params, rng)) <= 5 for _ in range(100))

    def test_rotate_then_delete_equals_start_at_first_retained(self):
        """The two stated formulations agree for every (rotation, mask) pair."""
        for x in all_strings(5):
            n = 5
            for r in range(n):
                for mask in range(1 << n):
                    rotated = x[r:] + x[:r]
                    form_a = "".join(rotated[j] for j in range(n) if (mask >> j) & 1)
                    keep = {(r + j) % n for j in range(n) if (mask >> j) & 1}
                    form_b = "".join(x[(r + j) % n] for j in range(n) if (r + j) % n in keep)
                    assert form_a == form_b

    def test_length_mean_matches_binomial(self):
        n, q, N = 6, 0.5, 1_000_000
        batch = generate_traces(CircularString.of("101101"), ChannelParams(q=q), N, seed=17)
        mean = float(batch.lengths.mean())
        assert abs(mean - n * (1 - q)) <= 4.0 * math.sqrt(n * (1 - q) * q / N)


class TestExactLaw:
    def test_single_bit(self):
        law = exact_trace_distribution(CircularString.of("1"), ChannelParams(q=0.3)).as_dict()
        assert law == pytest.approx({"1": 0.7, "": 0.3}, abs=1e-15)

    def test_identical_rotations(self):
        law = exact_trace_distribution(CircularString.of("11"), ChannelParams(q=0.5)).as_dict()
        assert law == pytest.approx({"11": 0.25, "1": 0.5, "": 0.25}, abs=1e-15)

    def test_two_rotations_by_hand(self):
        law = exact_trace_distribution(CircularString.of("10"), ChannelParams(q=0.5)).as_dict()
        expected = {"10": 0.125, "01": 0.125, "1": 0.25, "0": 0.25, "": 0.25}
        assert law == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
    def test_matches_naive_enumeration(self, q):
        for n in range(1, 6):
            for x in all_strings(n):
                law = exact_trace_distribution(CircularString.of(x), ChannelParams(q=q)).as_dict()
                assert law_close(law, naive_trace_law(x, q), 1e-13), x

    @pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
    def test_mass_sums_to_one(self, q):
        for n in range(1, 7):
            for x in all_strings(n):
                law = exact_trace_distribution(CircularString.of(x), ChannelParams(q=q))
                assert abs(law.mass() - 1.0) < 1e-12
        for x in ("0110100111", "1111100000"):
            law = exact_trace_distribution(CircularString.of(x), ChannelParams(q=q))
            assert abs(law.mass() - 1.0) < 1e-12

    def test_rotation_invariance(self):
        params = ChannelParams(q=0.4)
        for n in range(1, 7):
            for x in all_strings(n):
                base = exact_trace_distribution(CircularString.of(x), params).as_dict()
                for j in range(1, n):
                    rot = exact_trace_distribution(CircularString.of(x).rotate(j), params).as_dict()
                    assert law_close(base, rot, 1e-15), (x, j)

    def test_size_cap(self):
        with pytest.raises(InstanceTooLarge):
            exact_trace_distribution(CircularString.of("1" * 21), ChannelParams(q=0.5))

    def test_lookup_interface(self):
        law = exact_trace_distribution(CircularString.of("10"), ChannelParams(q=0.5))
        assert law["1"] == pytest.approx(0.25)
        assert law.get("11", 0.0) == 0.0
        assert "0" in law and "11" not in law
        assert law.prefix_mass(Bits.from_str("1")) == pytest.approx(0.375)

    def test_empirical_tv(self):
        x = CircularString.of("101")
        params = ChannelParams(q=0.5)
        law = exact_trace_distribution(x, params).as_dict()
        batch = generate_traces(x, params, 1_000_000, seed=23)
        counts = Counter(str(t) for t in batch)
        keys = set(law) | set(counts)
        tv = 0.5 * sum(abs(law.get(k, 0.0) - counts.get(k, 0) / len(batch)) for k in keys)
        assert tv <= 0.01


class TestBatch:
    def test_deterministic_and_thread_invariant(self):
        x = CircularString.of("10110")
        params = ChannelParams(q=0.3)
        one = generate_traces(x, params, 70_000, seed=5, threads=1)
        two = generate_traces(x, params, 70_000, seed=5, threads=4)
        assert np.array_equal(one.values, two.values)
        assert np.array_equal(one.lengths, two.lengths)
        again = generate_traces(x, params, 70_000, seed=5)
        assert np.array_equal(one.values, again.values)

    def test_different_seeds_differ(self):
        x = CircularString.of("10110")
        params = ChannelParams(q=0.3)
        a = generate_traces(x, params, 1000, seed=1)
        b = generate_traces(x, params, 1000, seed=2)
        assert not np.array_equal(a.values, b.values)

    def test_unique_matches_counter(self):
        x = CircularString.of("1011")
        batch = generate_traces(x, ChannelParams(q=0.5), 5000, seed=9)
        vals, lens, counts = batch.unique()
        direct = Counter((int(v), int(l)) for v, l in zip(batch.values, batch.lengths))
        assert {(int(v), int(l)): int(c) for v, l, c in zip(vals, lens, counts)} == dict(direct)

    def test_source_length_cap(self):
        with pytest.raises(InstanceTooLarge):
            generate_traces(CircularString.of("1" * 64), ChannelParams(q=0.5), 10)

    def test_jsonl_round_trip(self, tmp_path):
        batch = TraceBatch.from_traces([Trace.of("101"), Trace.of(""), Trace.of("0011")])
        path = tmp_path / "batch.jsonl"
        batch.to_jsonl(path)
        back = TraceBatch.from_jsonl(path)
        assert [str(t) for t in back] == ["101", "", "0011"]

    def test_csv_round_trip(self, tmp_path):
        law = exact_trace_distribution(CircularString.of("101"), ChannelParams(q=0.4))
        path = tmp_path / "law.csv"
        law.to_csv(path)
        back = type(law).from_csv(path)
        assert law_close(law.as_dict(), back.as_dict(), 0.0)
        assert path.read_text().splitlines()[0] == "trace,probability"


class TestPadding:
    def test_forced_pad(self):
        circ, pad = pad_linear("11", 4, rng_for(0), pad="00")
        assert str(circ) == "1100"
        assert str(pad) == "00"

    def test_minimum_length(self):
        circ, pad = pad_linear("1", 2, rng_for(4))
        assert len(circ) == 2 and len(pad) == 1
        assert str(circ)[0] == "1"

    def test_rejects_short_target(self):
        with pytest.raises(BadLength):
            pad_linear("1011", 7, rng_for(0))

    def test_unpad_examples(self):
        assert str(unpad(CircularString.of("1100"), "00")) == "11"
        with pytest.raises(PadNotUnique):
            unpad(CircularString.of("1010"), "00")
        with pytest.raises(PadNotUnique):
            unpad(CircularString.of("0000"), "00")

    def test_unpad_any_rotation(self):
        circ = CircularString.of("110100")
        for j in range(6):
            assert str(unpad(circ.rotate(j), "00")) == "1101"

    @given(st.text(alphabet="01", min_size=1, max_size=6), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_when_unique(self, x, seed):
        m = 2 * len(x) + 2
        circ, pad = pad_linear(x, m, rng_for(seed))
        hits = sum(1 for s in range(m) if circ.window(s, len(pad)) == pad)
        if hits == 1:
            assert str(unpad(circ, pad)) == x
        else:
            with pytest.raises(PadNotUnique):
                unpad(circ, pad)

"""Rearrangement semantics: frozen examples, lemma properties, oracle agreement."""

import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discrit.rearrange import (
    Matrix2D,
    WeightedSample,
    min_max_inequality,
    partial_rearrange,
    rearrange_dec,
    rearrange_inc,
    repeated_rearrange,
)

from _oracles import dec_oracle, repeated_oracle


def unit(values):
    return WeightedSample(values, [1] * len(values))


class TestDecreasing:
    @pytest.mark.parametrize("t,expected", [(1, 3), (2, 2), (F(5, 2), 1)])
    def test_three_atoms(self, t, expected):
        assert rearrange_dec(unit([3, 1, 2]), t) == expected

    def test_constant(self):
        s = WeightedSample([F(7, 3)] * 4, [F(1, 2)] * 4)
        for t in [F(1, 4), 1, 2]:
            assert rearrange_dec(s, t) == F(7, 3)

    def test_max_at_smallest_mass(self):
        assert rearrange_dec(unit([4, 9]), 1) == 9

    def test_all_zero(self):
        assert rearrange_dec(unit([0, 0]), 1) == 0

    def test_domain_errors(self):
        s = unit([1, 2])
        with pytest.raises(ValueError):
            rearrange_dec(s, 0)
        with pytest.raises(ValueError):
            rearrange_dec(s, 3)

    def test_tie_merging_is_immaterial(self):
        s = WeightedSample([2, 2, 1], [1, 1, 1])
        assert rearrange_dec(s, F(3, 2)) == 2
        assert rearrange_dec(s, 2) == 2
        assert rearrange_dec(s, F(5, 2)) == 1


class TestIncreasing:
    def test_step_enumeration(self):
        assert rearrange_inc(unit([1, 2, 3]), F(3, 2)) == 2

    def test_constant(self):
        assert rearrange_inc(WeightedSample([5, 5], [1, 1]), 1) == 5

    def test_single_atom(self):
        assert rearrange_inc(WeightedSample([5], [2]), 1) == 5

    def test_open_domain(self):
        with pytest.raises(ValueError):
            rearrange_inc(unit([1, 2]), 2)


class TestTwoVariable:
    def test_partial(self):
        m = Matrix2D([[1, 2], [3, 4]], [1, 1], [1, 1])
        assert partial_rearrange(m, 1).values == (3, 4)
        assert partial_rearrange(m, 2).values == (1, 2)

    def test_partial_constant(self):
        m = Matrix2D([[7, 7], [7, 7]], [1, 1], [1, 1])
        assert partial_rearrange(m, 1).values == (7, 7)

    @pytest.mark.parametrize("t,u,expected", [(1, 1, 4), (1, 2, 3)])
    def test_repeated(self, t, u, expected):
        m = Matrix2D([[1, 2], [3, 4]], [1, 1], [1, 1])
        assert repeated_rearrange(m, t, u) == expected

    def test_repeated_rank_one(self):
        v = [1, 2]
        m = Matrix2D([[a * b for b in v] for a in v], [1, 1], [1, 1])
        assert repeated_rearrange(m, 1, 1) == 4

    def test_repeated_constant(self):
        m = Matrix2D([[3, 3], [3, 3]], [1, 1], [1, 1])
        for t in (1, 2):
            for u in (1, 2):
                assert repeated_rearrange(m, t, u) == 3

    def test_fast_path_matches_generic(self):
        rng = random.Random(0)
        for _ in range(50):
            nr, nc = rng.randint(1, 5), rng.randint(1, 5)
            entries = np.array([[rng.randint(0, 4) for _ in range(nc)] for _ in range(nr)], dtype=float)
            rw = [rng.randint(1, 5) for _ in range(nr)]
            cw = [rng.randint(1, 5) for _ in range(nc)]
            t = rng.randint(1, sum(rw))
            u = rng.randint(1, sum(cw))
            fast = repeated_rearrange(Matrix2D(entries, rw, cw), t, u)
            generic = repeated_rearrange(Matrix2D(entries.tolist(), rw, cw), t, u)
            assert fast == generic


values_strategy = st.lists(
    st.fractions(min_value=0, max_value=8, max_denominator=6), min_size=1, max_size=8
)
weights_for = lambda n: st.lists(
    st.fractions(min_value=F(1, 4), max_value=4, max_denominator=4), min_size=n, max_size=n
)


@st.composite
def samples(draw):
    vals = draw(values_strategy)
    wts = draw(weights_for(len(vals)))
    return WeightedSample(vals, wts)


@st.composite
def samples_with_mass(draw):
    s = draw(samples())
    num = draw(st.integers(min_value=1, max_value=15))
    return s, s.total * F(num, 16)


@settings(max_examples=120, deadline=None)
@given(samples_with_mass(), st.fractions(min_value=F(1, 4), max_value=6, max_denominator=4))
def test_scaling_lemma(sample_t, c):
    sample, t = sample_t
    assert rearrange_dec(sample.scaled(c), t) == c * rearrange_dec(sample, t)


@settings(max_examples=120, deadline=None)
@given(samples_with_mass(), st.lists(st.fractions(min_value=0, max_value=3, max_denominator=4), min_size=8, max_size=8))
def test_domination_lemma(sample_t, bumps):
    sample, t = sample_t
    bigger = WeightedSample(
        [v + b for v, b in zip(sample.values, bumps)], sample.weights
    )
    assert rearrange_dec(bigger, t) >= rearrange_dec(sample, t)


@settings(max_examples=120, deadline=None)
@given(samples_with_mass(), st.sampled_from([F(1, 2), 1, 2, 3]))
def test_power_lemma(sample_t, alpha):
    sample, t = sample_t
    powered = WeightedSample([float(v) ** float(alpha) for v in sample.values], sample.weights)
    lhs = rearrange_dec(powered, t)
    rhs = float(rearrange_dec(sample, t)) ** float(alpha)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)


@settings(max_examples=120, deadline=None)
@given(samples_with_mass())
def test_monotone_in_mass(sample_t):
    sample, t = sample_t
    t2 = min(sample.total, t + sample.total / 8)
    assert rearrange_dec(sample, t) >= rearrange_dec(sample, t2)


@settings(max_examples=120, deadline=None)
@given(samples(), st.randoms(use_true_random=False))
def test_domain_inclusion_lemma(sample, rng):
    # deleting atoms can only lower the rearrangement at a fixed mass
    if len(sample) < 2:
        return
    keep = sorted(rng.sample(range(len(sample)), k=rng.randint(1, len(sample) - 1)))
    smaller = WeightedSample(
        [sample.values[i] for i in keep], [sample.weights[i] for i in keep]
    )
    if smaller.total == 0:
        return
    t = smaller.total * F(1, 2)
    assert rearrange_dec(smaller, t) <= rearrange_dec(sample, t)


@settings(max_examples=150, deadline=None)
@given(
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=1, max_value=5),
    st.randoms(use_true_random=False),
)
def test_min_max_inequality(nr, nc, rng):
    entries = [[rng.randint(0, 9) for _ in range(nc)] for _ in range(nr)]
    assert min_max_inequality(entries)


def test_dec_matches_threshold_oracle():
    rng = random.Random(3)
    for _ in range(300):
        n = rng.randint(1, 7)
        vals = [F(rng.randint(0, 9), rng.randint(1, 3)) for _ in range(n)]
        wts = [F(rng.randint(1, 5)) for _ in range(n)]
        s = WeightedSample(vals, wts)
        t = s.total * F(rng.randint(1, 7), 8)
        assert rearrange_dec(s, t) == dec_oracle(vals, wts, t)


def test_repeated_matches_definition_oracle_small():
    rng = random.Random(4)
    for _ in range(300):
        nr, nc = rng.randint(1, 4), rng.randint(1, 4)
        entries = [[rng.randint(0, 4) for _ in range(nc)] for _ in range(nr)]
        rw = [rng.randint(1, 4) for _ in range(nr)]
        cw = [rng.randint(1, 4) for _ in range(nc)]
        t = rng.randint(1, sum(rw))
        u = rng.randint(1, sum(cw))
        mine = repeated_rearrange(Matrix2D(entries, rw, cw), t, u)
        assert mine == repeated_oracle(entries, rw, cw, t, u)

"""Choquet integration and base-polyhedron duality on finite ground sets."""

import math
import random
from fractions import Fraction as F

import pytest

from discrit.choquet import (
    MonotoneSetFunction,
    base_polyhedron_max,
    choquet_integral,
    concave_cardinality_function,
    coverage_function,
    dual_set_function,
    from_callable,
    greedy_base_vertex,
    in_base_polyhedron,
    in_core_of_dual,
    load_set_function_csv,
    measure_subset_sums,
    random_submodular,
    save_set_function_csv,
)


@pytest.fixture
def v_example():
    # v({1}) = v({2}) = 1, v({1,2}) = 3/2
    return MonotoneSetFunction(2, (0, 1, 1, F(3, 2)))


def test_empty_set_must_vanish():
    with pytest.raises(ValueError):
        MonotoneSetFunction(1, (1, 2))


class TestChoquetIntegral:
    def test_indicator(self, v_example):
        assert choquet_integral(v_example, [1, 0]) == 1
        assert choquet_integral(v_example, [0, 1]) == 1
        assert choquet_integral(v_example, [1, 1]) == F(3, 2)

    def test_two_level(self, v_example):
        assert choquet_integral(v_example, [2, 1]) == F(5, 2)

    def test_constant(self, v_example):
        assert choquet_integral(v_example, [F(7, 2), F(7, 2)]) == F(7, 2) * F(3, 2)

    def test_negative_rejected(self, v_example):
        with pytest.raises(ValueError):
            choquet_integral(v_example, [1, -1])


class TestSubmodularity:
    def test_sqrt_cardinality(self):
        v = from_callable(4, lambda s: F(int(1000 * math.sqrt(len(s))), 1000))
        assert v.is_submodular()
        assert v.is_monotone()

    def test_additive_boundary(self):
        v = from_callable(4, lambda s: F(len(s)))
        assert v.is_submodular()

    def test_square_cardinality_not(self):
        v = from_callable(4, lambda s: F(len(s) ** 2))
        assert not v.is_submodular()


class TestDual:
    def test_additive_self_dual(self):
        v = from_callable(3, lambda s: F(len(s)))
        assert dual_set_function(v).table == v.table

    def test_example(self, v_example):
        w = dual_set_function(v_example)
        assert w(0b01) == F(1, 2)

    def test_involution(self, v_example):
        assert dual_set_function(dual_set_function(v_example)).table == v_example.table


class TestGreedy:
    def test_orders(self, v_example):
        assert greedy_base_vertex(v_example, (0, 1)) == (1, F(1, 2))
        assert greedy_base_vertex(v_example, (1, 0)) == (F(1, 2), 1)

    def test_additive_any_order(self):
        atoms = (F(1), F(2), F(3))
        v = from_callable(3, lambda s: sum(atoms[i] for i in s))
        for order in ((0, 1, 2), (2, 1, 0), (1, 2, 0)):
            assert greedy_base_vertex(v, order) == atoms

    def test_requires_submodular(self):
        v = from_callable(3, lambda s: F(len(s) ** 2))
        with pytest.raises(ValueError):
            greedy_base_vertex(v, (0, 1, 2))


class TestBasePolyhedron:
    def test_greedy_vertices_are_members(self, v_example):
        for order in ((0, 1), (1, 0)):
            assert in_base_polyhedron(greedy_base_vertex(v_example, order), v_example)

    def test_zero_vector_not_tight(self, v_example):
        assert not in_base_polyhedron((0, 0), v_example)

    def test_midpoint_member(self, v_example):
        a = greedy_base_vertex(v_example, (0, 1))
        b = greedy_base_vertex(v_example, (1, 0))
        mid = tuple((x + y) / 2 for x, y in zip(a, b))
        assert in_base_polyhedron(mid, v_example)

    def test_max_example(self, v_example):
        result = base_polyhedron_max(v_example, [2, 1])
        assert result.value == F(5, 2)
        assert result.enumerated == F(5, 2)
        assert result.greedy == F(5, 2)

    def test_max_constant(self, v_example):
        result = base_polyhedron_max(v_example, [F(3), F(3)])
        assert result.value == 3 * v_example(0b11)

    def test_core_of_dual_agrees(self, v_example):
        rng = random.Random(0)
        for _ in range(50):
            mu = tuple(F(rng.randint(0, 4), rng.randint(1, 3)) for _ in range(2))
            assert in_base_polyhedron(mu, v_example) == in_core_of_dual(mu, v_example)


def test_duality_identity_random():
    # reflected-integrand calculus: choquet(dual, N - F) = N v(ground) - choquet(v, F)
    rng = random.Random(1)
    for _ in range(60):
        n = rng.randint(2, 5)
        v = random_submodular(n, rng)
        f = [F(rng.randint(0, 5), rng.randint(1, 2)) for _ in range(n)]
        top = max(f)
        reflected = [top - x for x in f]
        lhs = choquet_integral(dual_set_function(v), reflected)
        rhs = top * v(v.full_mask) - choquet_integral(v, f)
        assert lhs == rhs


def test_generators_are_submodular_monotone():
    rng = random.Random(2)
    for _ in range(25):
        n = rng.randint(2, 5)
        v = random_submodular(n, rng)
        assert v.is_monotone()
        assert v.is_submodular()
        assert v(0) == 0


def test_coverage_and_concave_constructors():
    sets = [frozenset({0, 1}), frozenset({1}), frozenset({2})]
    weights = {0: F(1), 1: F(2), 2: F(1, 2)}
    v = coverage_function(3, sets, weights)
    assert v.is_submodular()
    assert v(0b111) == F(7, 2)
    w = concave_cardinality_function(3, [F(3), F(2), F(1)])
    assert w.is_submodular()
    with pytest.raises(ValueError):
        concave_cardinality_function(2, [F(1), F(2)])


def test_membership_subset_sums():
    sums = measure_subset_sums([F(1), F(2), F(4)])
    assert sums[0b101] == F(5)
    assert sums[0b111] == F(7)


def test_csv_round_trip(tmp_path):
    rng = random.Random(3)
    v = random_submodular(4, rng)
    path = tmp_path / "setfn.csv"
    save_set_function_csv(v, path)
    back = load_set_function_csv(path)
    assert back.table == v.table

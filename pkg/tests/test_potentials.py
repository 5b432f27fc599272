"""Cantor-window potential: point values, exact distributions, atoms, kernel matrix."""

import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from discrit.measure_space import build_cube_grid
from discrit.potentials import (
    box_supremum,
    box_value_distribution,
    cantor_level_of,
    cantor_window_potential,
    cantor_window_profile,
    constant_potential,
    evaluate,
    evaluate_on_centers,
    grid_potential,
    kept_measure,
    lattice_cell,
    periodic_window,
    periodic_window_mass,
    profile_level_value,
    riesz_potential_matrix,
    window_atoms,
    window_constant,
    window_level_masses,
)


class TestPeriodicWindow:
    def test_full_window(self):
        for x in [0.1, 0.999, 5, F(7, 2)]:
            assert periodic_window(1, x) == 1

    def test_empty_window(self):
        for x in [0.0, 0.3, 2.25]:
            assert periodic_window(0, x) == 0

    def test_third_window(self):
        assert periodic_window(F(1, 3), F(9, 4)) == 1   # frac = 1/4 <= 1/3
        assert periodic_window(F(1, 3), F(1, 2)) == 0   # frac = 1/2 > 1/3

    def test_mass_formula(self):
        # one period of 3^-2, window fraction 1/3
        got = periodic_window_mass(F(0), F(1, 9), 2, F(1, 3))
        assert got == F(1, 27)
        # clipped piece
        got = periodic_window_mass(F(1, 54), F(1, 9), 2, F(1, 3))
        assert got == F(1, 27) - F(1, 54)

    def test_mass_matches_sampling(self):
        rng = random.Random(0)
        for _ in range(20):
            a = F(rng.randint(0, 50), 100)
            b = a + F(rng.randint(1, 40), 100)
            beta = F(rng.randint(1, 8), 9)
            exact = periodic_window_mass(a, b, 2, beta)
            grid = 3**2 * 720
            hits = sum(
                1
                for k in range(int(a * grid), int(b * grid))
                if periodic_window(beta, 9 * F(2 * k + 1, 2 * grid)) == 1
            )
            assert abs(float(exact) - hits / grid) < 2e-3


class TestWindowConstant:
    def test_d3_default(self):
        assert window_constant(3) == pytest.approx(8 * math.sqrt(3))

    def test_theta_dependence(self):
        # doubling theta shrinks the constant
        assert window_constant(3, F(2, 9)) < window_constant(3, F(1, 9))


class TestCantorLevelOf:
    def test_middle(self):
        assert cantor_level_of(F(1, 2)) == 1
        assert cantor_level_of(F(3, 18)) == 2

    def test_cantor_point(self):
        assert cantor_level_of(F(1, 4)) is None  # 1/4 lies in the Cantor set

    def test_boundaries_belong_to_closed_intervals(self):
        assert cantor_level_of(F(1, 3)) == 1
        assert cantor_level_of(F(2, 3)) == 1

    def test_out_of_range(self):
        assert cantor_level_of(F(3, 2)) is None


class TestProfile:
    def test_window_missed(self):
        spec = cantor_window_potential(3, 1, amplitude=lambda l: 1)
        # u = 1/2: level 1, frac(3 u) = 1/2 > 1/3 -> 0
        assert cantor_window_profile(spec, (0, 0, 0), F(1, 2)) == 0.0

    def test_window_hit(self):
        spec = cantor_window_potential(3, 1, amplitude=lambda l: 1)
        u = F(1, 3) + F(1, 18)  # frac(3u) = 1/6 <= 1/3
        expected = window_constant(3) / 3
        assert cantor_window_profile(spec, (0, 0, 0), u) == pytest.approx(expected)

    def test_cantor_point_vanishes(self):
        spec = cantor_window_potential(3, 1)
        assert cantor_window_profile(spec, (5, 0, 0), F(1, 4)) == 0.0

    def test_domain(self):
        spec = cantor_window_potential(3, 1)
        with pytest.raises(ValueError):
            cantor_window_profile(spec, (0, 0, 0), F(3, 2))

    def test_level_value_formula(self):
        spec = cantor_window_potential(3, 1)
        assert profile_level_value(spec, (4, 0, 0), 2) == pytest.approx(
            5 * window_constant(3) * 3.0**-2
        )


class TestLatticeCell:
    def test_interior(self):
        assert lattice_cell((0.5, 1.2, -0.3)) == (0, 1, -1)

    def test_face_points_take_smaller_cell(self):
        assert lattice_cell((1.0, 0.0, 2.0)) == (0, -1, 1)

    def test_offset_in_half_open_unit(self):
        for x in [0.25, 1.0, -0.75, 3.5]:
            ell = lattice_cell((x, 0.5, 0.5))
            assert 0 < x - ell[0] <= 1


class TestEvaluate:
    def test_constant(self):
        assert evaluate(constant_potential(3, 2.5), (1, 2, 3)) == 2.5

    def test_grid_nearest(self):
        g = build_cube_grid([0, 0, 0], 1, 2)
        vals = np.arange(len(g), dtype=float)
        spec = grid_potential(g, vals)
        assert evaluate(spec, tuple(g.centers[3])) == 3.0

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            cantor_window_potential(3, 2)
        with pytest.raises(ValueError):
            cantor_window_potential(3, 0)

    def test_default_amplitude(self):
        spec = cantor_window_potential(3, 1)
        assert spec.amplitude_at((0, 0, 0)) == 1
        assert spec.amplitude_at((4, 0, 0)) == 5
        assert spec.amplitude_at((-9, 2, 1)) == 10  # min(10, 3^9)

    def test_amplitude_growth_cap(self):
        spec = cantor_window_potential(4, 1)  # d - 2 = 2
        assert spec.amplitude_at((1, 0, 0, 0)) == 2


class TestDistribution:
    def test_level_masses_whole_cell(self):
        spec = cantor_window_potential(3, 1)
        lm = window_level_masses(spec, (2, 0, 0), F(0), F(1))
        # aligned levels: window fraction 3^-j of the level-j gap measure
        for j in range(1, 4):
            expected = F(2) ** (j - 1) * F(1, 3**j) * F(1, 3**j)
            assert lm.masses[j] == expected
        assert lm.tail_mass_bound < F(1, 10**6)

    def test_deep_levels_fold_to_zero_for_unit_alpha(self):
        # beyond the period exponent the window prefix misses every deeper gap
        spec = cantor_window_potential(3, 1)
        lm = window_level_masses(spec, (1, 0, 0), F(0), F(1))
        assert all(j <= 2 for j in lm.masses)

    def test_masses_match_monte_carlo(self):
        spec = cantor_window_potential(3, 1)
        lm = window_level_masses(spec, (3, 0, 0), F(0), F(1))
        rng = random.Random(7)
        trials = 60000
        hits = sum(
            1
            for _ in range(trials)
            if cantor_window_profile(spec, (3, 0, 0), F(rng.randrange(1, 3**10), 3**10)) > 0
        )
        assert hits / trials == pytest.approx(float(lm.positive_mass()), abs=5e-3)

    def test_sliver_handling_is_exact(self):
        # break period alignment on purpose; exact masses must agree with the
        # aligned computation restricted to the same interval
        spec = cantor_window_potential(3, 1)
        whole = window_level_masses(spec, (1, 0, 0), F(0), F(1))
        left = window_level_masses(spec, (1, 0, 0), F(0), F(5, 7))
        right = window_level_masses(spec, (1, 0, 0), F(5, 7), F(1))
        for j in set(whole.masses) | set(left.masses) | set(right.masses):
            got = left.masses.get(j, F(0)) + right.masses.get(j, F(0))
            assert got == whole.masses.get(j, F(0))

    def test_box_distribution_totals(self):
        spec = cantor_window_potential(3, 1)
        lo, hi = (F(1), F(0), F(0)), (F(2), F(1), F(1))
        pairs, zero_mass, tail, _ = box_value_distribution(spec, lo, hi)
        total = sum(m for _, m in pairs) + zero_mass + tail
        assert total == F(1)

    def test_distinct_values_structurally_bounded(self):
        spec = cantor_window_potential(3, 1, max_level=40)
        pairs, _, _, _ = box_value_distribution(spec, (F(2), F(0), F(0)), (F(3), F(1), F(1)))
        assert len(pairs) <= 2 * spec.max_level

    def test_unit_cube_supremum(self):
        # level-1 slab carries the largest value when its window is hit
        spec = cantor_window_potential(3, 1)
        sup = box_supremum(spec, (F(4), F(0), F(0)), (F(5), F(1), F(1)))
        assert sup == pytest.approx(5 * window_constant(3) / 3)

    def test_point_evaluation_consistent_with_distribution(self):
        spec = cantor_window_potential(3, 1)
        pairs, _, _, _ = box_value_distribution(spec, (F(2), F(0), F(0)), (F(3), F(1), F(1)))
        values = {round(v, 9) for v, m in pairs if m > 0}
        rng = random.Random(9)
        seen = set()
        for _ in range(4000):
            u = F(rng.randrange(1, 3**9), 3**9)
            val = cantor_window_profile(spec, (2, 0, 0), u)
            if val > 0:
                seen.add(round(val, 9))
        assert seen <= values


class TestWindowAtoms:
    def test_masses_conserve_box_volume(self):
        spec = cantor_window_potential(3, 1)
        h = F(1, 9)
        xi = (F(4, 9) + 2, F(1, 2), F(1, 2))
        atoms = window_atoms(spec, [c - h for c in xi], [c + h for c in xi])
        assert sum(atoms.masses, F(0)) + atoms.zero_mass == atoms.total_mass
        assert atoms.total_mass == (2 * h) ** 3

    def test_atom_masses_match_distribution(self):
        spec = cantor_window_potential(3, 1)
        h = F(1, 9)
        xi = (F(4, 9) + 2, F(1, 2), F(1, 2))
        lo = [c - h for c in xi]
        hi = [c + h for c in xi]
        atoms = window_atoms(spec, lo, hi)
        pairs, _, _, _ = box_value_distribution(spec, lo, hi)
        dist = {round(v, 9): m for v, m in pairs}
        got: dict = {}
        for v, m in zip(atoms.values, atoms.masses):
            got[round(v, 9)] = got.get(round(v, 9), F(0)) + m
        assert got == {k: v for k, v in dist.items() if v > 0}


class TestRieszPotentialMatrix:
    def test_unit_potential_is_pure_kernel(self):
        g = build_cube_grid([0, 0, 0], 1, 2)
        spec = constant_potential(3, 1)
        km = riesz_potential_matrix(spec, g, g)
        i, j = 0, 7
        dist = np.linalg.norm(g.centers[i] - g.centers[j])
        assert km.entries[i, j] == pytest.approx(dist ** (2 - 3))

    def test_zero_potential(self):
        g = build_cube_grid([0, 0, 0], 1, 2)
        km = riesz_potential_matrix(constant_potential(3, 0), g, g)
        assert np.all(km.entries == 0)

    def test_hand_computed_two_cells(self):
        g = build_cube_grid([0, 0, 0], 1, 2)
        vals = np.zeros(len(g))
        vals[0], vals[7] = 4.0, 9.0
        spec = grid_potential(g, vals)
        km = riesz_potential_matrix(spec, g, g)
        dist = np.linalg.norm(g.centers[0] - g.centers[7])
        assert km.entries[0, 7] == pytest.approx(2 * 3 / dist)
        assert km.entries[1, 7] == 0.0

    def test_scaling_in_potential(self):
        g = build_cube_grid([0, 0, 0], 1, 2)
        rng = np.random.default_rng(0)
        vals = rng.uniform(0.1, 1, len(g))
        a = riesz_potential_matrix(grid_potential(g, vals), g, g).entries
        b = riesz_potential_matrix(grid_potential(g, 4 * vals), g, g).entries
        assert np.allclose(b, 4 * a)

    def test_sentinel_on_coincident_centers(self):
        g = build_cube_grid([0, 0, 0], 1, 2)
        km = riesz_potential_matrix(constant_potential(3, 1), g, g)
        off_max = km.entries[~np.eye(len(g), dtype=bool)].max()
        assert np.all(np.diag(km.entries) == pytest.approx(10 * off_max))


def test_kept_measure_basics():
    assert kept_measure(1, F(0), F(1)) == F(2, 3)
    assert kept_measure(2, F(0), F(1, 3)) == F(2, 9)
    assert kept_measure(3, F(1, 3), F(2, 3)) == 0


def test_evaluate_on_centers_matches_pointwise():
    spec = cantor_window_potential(3, 1)
    g = build_cube_grid([2.5, 0.5, 0.5], 0.4, 3)
    vals = evaluate_on_centers(spec, g)
    direct = [evaluate(spec, tuple(c)) for c in g.centers]
    assert np.allclose(vals, direct)

"""Potential constructors, including the Cantor-window counterexample family.

The closed-form family lives on unit cells of the integer lattice.  Inside the
cell of lattice point l, the potential depends on the first coordinate offset
u = x1 - l1 in (0, 1] only: on the level-n middle-third interval family it
equals

    N(l) * [frac(3^p u) in (0, 3^(-alpha n)]] * C(theta) * 3^(-n (d - 2)),

with p = |l|_inf + 1 and amplitude N(l) >= 1, and it vanishes off the union of
the middle-third families.  C(theta) = (2 sqrt(d) (1 + 1/(theta d)))^(d-2).

The window oscillates at scale 3^(-p - alpha n), so uniform grids alias badly.
Instead, the one-dimensional value distribution over any interval is computed
exactly in rational arithmetic: level masses aggregate in closed form through
the Cantor kept-set measure function, deep levels fold by self-similarity, and
anything beyond the computation cap is returned as a certified upper bound on
the remaining mass.
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from ._util import Number, is_exact
from .kernels import KernelMatrix
from .measure_space import DiscreteMeasureSpace
from .partitions import cantor_level

SENTINEL_FACTOR = 10.0
_SLIVER_ENUM_CAP = 12


def periodic_window(beta, x) -> int:
    """1-periodic indicator of (0, beta]; the fractional part 0 stands for 1."""
    if not 0 <= beta <= 1:
        raise ValueError("beta must lie in [0, 1]")
    frac = x - math.floor(x)
    if frac == 0:
        frac = frac + 1
    return 1 if frac <= beta else 0


def window_constant(d: int, theta=Fraction(1, 9)) -> float:
    """Front constant (2 sqrt(d) (1 + 1/(theta d)))^(d-2)."""
    return float((2 * math.sqrt(d) * (1 + 1 / (float(theta) * d))) ** (d - 2))


def default_amplitude(d: int) -> Callable[[tuple], int]:
    """min(|l|_inf + 1, 3^(|l|_inf (d-2))): at least 1, divergent, growth-capped."""

    def amplitude(ell: tuple) -> int:
        linf = max(abs(int(c)) for c in ell) if len(ell) else 0
        return min(linf + 1, 3 ** (linf * (d - 2)))

    return amplitude


def cantor_level_of(u, max_level: int = 40) -> Optional[int]:
    """Level of the middle-third interval containing u in [0, 1], or None.

    Exact for Fraction input; float input is reliable to roughly 30 levels.
    """
    if u < 0 or u > 1:
        return None
    y = u
    one = Fraction(1) if is_exact(u) else 1.0
    for j in range(1, max_level + 1):
        if one <= 3 * y <= 2 * one:
            return j
        if 3 * y < one:
            y = 3 * y
        else:
            y = 3 * y - 2 * one
    return None


@dataclass(frozen=True)
class PotentialSpec:
    """Evaluator description for a potential V >= 0 on R^d."""

    dimension: int
    kind: str                                # 'cantor_window' | 'grid' | 'constant'
    alpha: Optional[Number] = None
    theta: Fraction = Fraction(1, 9)
    amplitude: Optional[Callable[[tuple], Number]] = None
    max_level: int = 40
    constant: Optional[Number] = None
    grid: Optional[DiscreteMeasureSpace] = None
    grid_values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dimension < 3:
            raise ValueError("dimension must be >= 3")
        if self.kind == "cantor_window":
            if self.alpha is None or not 0 < self.alpha < 2:
                raise ValueError("alpha must lie in (0, 2)")
        elif self.kind == "constant":
            if self.constant is None or self.constant < 0:
                raise ValueError("constant potential must be >= 0")
        elif self.kind == "grid":
            if self.grid is None or self.grid_values is None:
                raise ValueError("grid potentials need a space and per-cell values")
            if len(self.grid_values) != len(self.grid):
                raise ValueError("one value per cell required")
            if np.any(np.asarray(self.grid_values) < 0):
                raise ValueError("values must be >= 0")
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    def amplitude_at(self, ell: tuple) -> Number:
        fn = self.amplitude or default_amplitude(self.dimension)
        return fn(ell)


def cantor_window_potential(
    d: int,
    alpha: Number,
    theta=Fraction(1, 9),
    amplitude: Optional[Callable] = None,
    max_level: int = 40,
) -> PotentialSpec:
    return PotentialSpec(
        d, "cantor_window", alpha=alpha, theta=Fraction(theta), amplitude=amplitude,
        max_level=max_level,
    )


def constant_potential(d: int, c: Number) -> PotentialSpec:
    return PotentialSpec(d, "constant", constant=c)


def grid_potential(space: DiscreteMeasureSpace, values) -> PotentialSpec:
    return PotentialSpec(
        space.dimension, "grid", grid=space, grid_values=np.asarray(values, dtype=float)
    )


def save_grid_potential_csv(spec: PotentialSpec, path) -> None:
    """Rows `cell_index,value` matching the grid's cell order."""
    import csv

    if spec.kind != "grid":
        raise ValueError("only grid potentials have per-cell values")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_index", "value"])
        for i, v in enumerate(spec.grid_values):
            writer.writerow([i, repr(float(v))])


def load_grid_potential_csv(space: DiscreteMeasureSpace, path) -> PotentialSpec:
    import csv

    values = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            values[int(rec["cell_index"])] = float(rec["value"])
    return grid_potential(space, [values[i] for i in range(len(space))])


def lattice_cell(x: Sequence) -> tuple:
    """Lattice point l with x in l + (0, 1]^d componentwise.

    The lexicographically smallest l whose side-2 cube l + [-1, 1]^d contains
    x; makes the overlapping-cube covering single-valued.
    """
    return tuple(math.ceil(c) - 1 for c in x)


def _beta_at(spec: PotentialSpec, j: int):
    alpha = spec.alpha
    if is_exact(alpha) and (Fraction(alpha) * j).denominator == 1:
        return Fraction(1, 3 ** int(Fraction(alpha) * j))
    return 3.0 ** (-float(alpha) * j)


def profile_level_value(spec: PotentialSpec, ell: tuple, j: int) -> float:
    """Potential value on the level-j window inside the cell of l."""
    return float(spec.amplitude_at(ell)) * window_constant(spec.dimension, spec.theta) * 3.0 ** (
        -j * (spec.dimension - 2)
    )


def cantor_window_profile(spec: PotentialSpec, ell: tuple, u) -> float:
    """Profile value at first-coordinate offset u in (0, 1] inside cell l."""
    if not 0 < u <= 1:
        raise ValueError("offset must lie in (0, 1]")
    j = cantor_level_of(u, spec.max_level)
    if j is None:
        return 0.0
    p = max(abs(int(c)) for c in ell) + 1
    if periodic_window(_beta_at(spec, j), (3**p) * u) == 0:
        return 0.0
    return profile_level_value(spec, ell, j)


def evaluate(spec: PotentialSpec, x) -> float:
    """Point evaluation; window decisions are exact for Fraction coordinates."""
    if spec.kind == "constant":
        return float(spec.constant)
    if spec.kind == "grid":
        centers = spec.grid.centers
        idx = int(np.argmin(np.max(np.abs(centers - np.asarray(x, dtype=float)), axis=1)))
        return float(spec.grid_values[idx])
    ell = lattice_cell(x)
    return cantor_window_profile(spec, ell, x[0] - ell[0])


def evaluate_on_centers(spec: PotentialSpec, space: DiscreteMeasureSpace) -> np.ndarray:
    if spec.kind == "grid":
        if len(spec.grid) == len(space) and np.array_equal(spec.grid.centers, space.centers):
            return np.asarray(spec.grid_values, dtype=float)
        from scipy.spatial import cKDTree

        _, idx = cKDTree(spec.grid.centers).query(space.centers)
        return np.asarray(spec.grid_values, dtype=float)[idx]
    if spec.kind == "constant":
        return np.full(len(space), float(spec.constant))
    return np.asarray([evaluate(spec, tuple(c)) for c in space.centers])


# -- exact one-dimensional distribution machinery ---------------------------------


def periodic_window_mass(a, b, period_exp: int, beta):
    """Measure of {u in [a, b] : frac(3^period_exp u) in (0, beta]}; exact for Fractions."""
    if b < a:
        raise ValueError("empty interval")
    P = 3**period_exp

    def counting(x):
        px = P * x
        fl = math.floor(px)
        return (fl * beta + min(px - fl, beta)) / P

    return counting(b) - counting(a)


def kept_measure_below(q: int, x: Fraction) -> Fraction:
    """Measure of the depth-q Cantor kept set intersected with [0, x]."""
    if x <= 0:
        return Fraction(0)
    if x >= 1:
        return Fraction(2, 3) ** q
    if q == 0:
        return Fraction(x)
    third = Fraction(1, 3)
    if x <= third:
        return kept_measure_below(q - 1, 3 * x) / 3
    if x <= 2 * third:
        return Fraction(2, 3) ** (q - 1) / 3
    return (Fraction(2, 3) ** (q - 1) + kept_measure_below(q - 1, 3 * x - 2)) / 3


def kept_measure(q: int, a: Fraction, b: Fraction) -> Fraction:
    return kept_measure_below(q, b) - kept_measure_below(q, a)


def gap_measure(j: int, a: Fraction, b: Fraction) -> Fraction:
    """Measure of the level-j middle-third intervals inside [a, b]."""
    return kept_measure(j - 1, a, b) - kept_measure(j, a, b)


@lru_cache(maxsize=64)
def _cantor_level_cached(j: int) -> tuple:
    return tuple(cantor_level(j))


@dataclass
class LevelMasses:
    """Exact per-level window masses over an interval, plus a certified tail bound."""

    masses: dict                 # level j -> Fraction mass where V takes the level value
    tail_mass_bound: Fraction    # upper bound on window mass beyond `deepest`
    deepest: int                 # levels 1..deepest are exact
    width: Fraction

    def positive_mass(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def positive_mass_upper(self) -> Fraction:
        return self.positive_mass() + self.tail_mass_bound


def window_level_masses(spec: PotentialSpec, ell: tuple, a, b) -> LevelMasses:
    """Exact level-by-level window masses of the profile over offsets [a, b] in [0, 1].

    Levels j <= p (the oscillation period exponent) aggregate in closed form:
    middle-third intervals are period-aligned, so the window covers exactly
    beta_j of their measure.  Levels beyond p fold through self-similarity:
    inside every depth-p kept interval the window is the prefix
    (0, beta_j 3^(-p)], so the level mass is the kept count times the scaled
    prefix gap measure.  Interval ends that are not period-aligned (slivers)
    are handled exactly up to level p and bounded above beyond that.
    """
    if spec.kind != "cantor_window":
        raise ValueError("distribution requires the closed-form potential")
    a = max(Fraction(a), Fraction(0))
    b = min(Fraction(b), Fraction(1))
    if b <= a:
        return LevelMasses({}, Fraction(0), spec.max_level, Fraction(0))
    p = max(abs(int(c)) for c in ell) + 1
    period = Fraction(1, 3**p)
    deep = spec.max_level
    masses: dict[int, Fraction] = {}
    tail = Fraction(0)

    a_al = -((-a) // period) * period   # ceil to the period lattice
    b_al = (b // period) * period       # floor

    def add(j: int, mass):
        if mass:
            masses[j] = masses.get(j, Fraction(0)) + mass

    slivers = []
    if a_al > b_al:
        slivers.append((a, b))
        a_al = b_al = None
    else:
        if a < a_al:
            slivers.append((a, a_al))
        if b_al < b:
            slivers.append((b_al, b))

    for lo, hi in slivers:
        j_cap = min(p, deep, _SLIVER_ENUM_CAP)
        for j in range(1, j_cap + 1):
            intervals = _cantor_level_cached(j)
            starts = [c for c, _ in intervals]
            k0 = max(0, bisect_left(starts, lo) - 1)
            for c, d_ in intervals[k0:]:
                if c > hi:
                    break
                clo, chi = max(lo, c), min(hi, d_)
                if clo < chi:
                    add(j, periodic_window_mass(clo, chi, p, _beta_at(spec, j)))
        tail += kept_measure(j_cap, lo, hi)

    if a_al is not None and a_al < b_al:
        for j in range(1, min(p, deep) + 1):
            add(j, _beta_at(spec, j) * gap_measure(j, a_al, b_al))
        if deep > p:
            kept_p = kept_measure(p, a_al, b_al)
            n_kept = kept_p / period
            if n_kept.denominator != 1:
                raise RuntimeError("period-aligned kept count must be integral")
            n_kept = int(n_kept)
            if n_kept:
                for j in range(p + 1, deep + 1):
                    prefix_gap = gap_measure(j - p, Fraction(0), Fraction(_beta_at(spec, j)))
                    add(j, n_kept * period * prefix_gap)
                tail += n_kept * period * Fraction(2, 3) ** (deep - p)
        else:
            tail += kept_measure(deep, a_al, b_al)

    return LevelMasses(masses, tail, deep, b - a)


def box_value_distribution(spec: PotentialSpec, lo: Sequence, hi: Sequence):
    """Exact (value, mass) distribution of the potential over an axis-aligned box.

    The box is split along integer cell boundaries; each piece has a single
    lattice cell l, so its first-coordinate level masses times the
    cross-sectional area give the exact contribution.  Returns
    (pairs, zero_mass, tail_mass_bound, tail_value_bound) with pairs sorted by
    decreasing value.
    """
    if spec.kind != "cantor_window":
        raise ValueError("distribution requires the closed-form potential")
    lo = [Fraction(c) for c in lo]
    hi = [Fraction(c) for c in hi]
    d = spec.dimension

    def axis_pieces(k: int) -> list:
        pieces = []
        left = lo[k]
        while left < hi[k]:
            nxt = min(hi[k], Fraction(math.floor(left) + 1))
            if nxt <= left:
                nxt = min(hi[k], left + 1)
            pieces.append((left, nxt))
            left = nxt
        return pieces

    pairs: dict[tuple, list] = {}
    zero_mass = Fraction(0)
    tail_bound = Fraction(0)
    tail_value = 0.0
    for combo in itertools.product(*(axis_pieces(k) for k in range(d))):
        ell = tuple(math.ceil(b_) - 1 for (_, b_) in combo)
        cross = Fraction(1)
        for k in range(1, d):
            cross *= combo[k][1] - combo[k][0]
        if cross == 0:
            continue
        u_lo = combo[0][0] - ell[0]
        u_hi = combo[0][1] - ell[0]
        lm = window_level_masses(spec, ell, u_lo, u_hi)
        piece_total = (u_hi - u_lo) * cross
        pos = Fraction(0)
        for j, mass in lm.masses.items():
            key = (ell, j)
            entry = pairs.setdefault(key, [profile_level_value(spec, ell, j), Fraction(0)])
            entry[1] += mass * cross
            pos += mass * cross
        tail_here = lm.tail_mass_bound * cross
        tail_bound += tail_here
        if tail_here:
            tail_value = max(tail_value, profile_level_value(spec, ell, lm.deepest + 1))
        zero_mass += piece_total - pos - tail_here

    out = sorted(((v, m) for v, m in pairs.values()), key=lambda e: -e[0])
    return out, zero_mass, tail_bound, tail_value


def box_supremum(spec: PotentialSpec, lo: Sequence, hi: Sequence) -> float:
    """Closed-form upper bound over a box: the largest level value present
    (deeper levels only decay), or the tail value bound if larger."""
    pairs, _, _, tail_value = box_value_distribution(spec, lo, hi)
    best = max((v for v, m in pairs if m > 0), default=0.0)
    return max(best, tail_value)


# -- window-adapted atoms for two-variable rearrangements --------------------------


@dataclass(frozen=True)
class AtomSet:
    """Weighted point masses carrying potential values, plus a lumped zero mass.

    Masses are exact rationals; positions sit at subcell centers, so distances
    are resolved at the subcell scale while superlevel masses stay exact.  Deep
    tail mass is folded into the zero lump (a value underestimate, which is the
    conservative direction for lower-bound criteria).
    """

    positions: np.ndarray      # (m, d) float
    masses: tuple              # (m,) Fraction
    values: tuple              # (m,) float, > 0
    zero_mass: Fraction
    total_mass: Fraction

    def __len__(self) -> int:
        return len(self.values)


def window_atoms(
    spec: PotentialSpec,
    lo: Sequence,
    hi: Sequence,
    n_axis: int = 6,
    n_cross: int = 6,
) -> AtomSet:
    """Window-adapted atoms over a box for the closed-form potential.

    The first axis is cut into n_axis subcells whose exact per-level window
    masses become atoms at the subcell centers; the remaining axes are cut
    uniformly (the potential does not vary there, only distances do).
    """
    if spec.kind != "cantor_window":
        raise ValueError("window atoms require the closed-form potential")
    lo = [Fraction(c) for c in lo]
    hi = [Fraction(c) for c in hi]
    d = spec.dimension

    def split_axis(a: Fraction, b: Fraction, n: int) -> list:
        """Uniform subcells, further split at integer-lattice boundaries."""
        width = (b - a) / n
        cells = []
        for i in range(n):
            left = a + i * width
            right = a + (i + 1) * width
            while left < right:
                nxt = min(right, Fraction(math.floor(left) + 1))
                if nxt <= left:
                    nxt = min(right, left + 1)
                cells.append((left, nxt))
                left = nxt
        return cells

    axis_cells = split_axis(lo[0], hi[0], n_axis)
    cross_axes = [split_axis(lo[k], hi[k], n_cross) for k in range(1, d)]
    cross_combos = list(itertools.product(*cross_axes)) if d > 1 else [()]

    positions = []
    masses = []
    values = []
    zero = Fraction(0)
    total = Fraction(1)
    for a, b in [(lo[k], hi[k]) for k in range(d)]:
        total *= b - a

    for a, b in axis_cells:
        ell1 = math.ceil(b) - 1
        lm_by_p: dict[int, LevelMasses] = {}
        for combo in cross_combos:
            cross_width = Fraction(1)
            for c0, c1 in combo:
                cross_width *= c1 - c0
            ell = (ell1,) + tuple(math.ceil(c1) - 1 for c0, c1 in combo)
            p = max(abs(c) for c in ell) + 1
            lm = lm_by_p.get(p)
            if lm is None:
                lm = window_level_masses(spec, ell, a - ell1, b - ell1)
                lm_by_p[p] = lm
            centre = [float((a + b) / 2)] + [float((c0 + c1) / 2) for c0, c1 in combo]
            cell_pos = Fraction(0)
            for j, mass in sorted(lm.masses.items()):
                if mass == 0:
                    continue
                positions.append(centre)
                masses.append(mass * cross_width)
                values.append(profile_level_value(spec, ell, j))
                cell_pos += mass * cross_width
            zero += (b - a) * cross_width - cell_pos

    pos = np.asarray(positions, dtype=float) if positions else np.zeros((0, d))
    return AtomSet(pos, tuple(masses), tuple(values), zero, total)


# -- pointwise x-t kernel matrix ---------------------------------------------------


def riesz_potential_matrix(
    spec: PotentialSpec, rows: DiscreteMeasureSpace, cols: DiscreteMeasureSpace
) -> KernelMatrix:
    """Matrix sqrt(V(x)) |x - t|^(2-d) sqrt(V(t)) at cell centers.

    Coincident centers with positive values get a sentinel of 10x the largest
    finite entry (the singularity is integrable; rearrangements at masses of at
    least one cell are insensitive to it).  Entries with a vanishing potential
    factor are exactly zero.
    """
    d = spec.dimension
    sr = np.sqrt(evaluate_on_centers(spec, rows))
    sc = np.sqrt(evaluate_on_centers(spec, cols))
    diff = rows.centers[:, None, :] - cols.centers[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    kern = np.zeros_like(dist)
    nz = dist > 0
    kern[nz] = dist[nz] ** (2.0 - d)
    entries = sr[:, None] * kern * sc[None, :]
    positive = (sr[:, None] > 0) & (sc[None, :] > 0)
    coincident = positive & ~nz
    if coincident.any():
        regular = positive & nz
        finite_max = float(entries[regular].max()) if regular.any() else 1.0
        entries[coincident] = SENTINEL_FACTOR * finite_max
    return KernelMatrix(entries, rows, cols)

"""m-adic cube families, Cantor interval systems and dense-system verification.

A dense system is a sequence of levels, each a finite union of axis-aligned
boxes inside an ambient box, with parameters m > 1 and theta in (0, 1).  The
defining property: every small cube Q_r(z) inside the ambient box meets some
early level (index at most floor(log_m(1/(theta r)))) in a theta-shrunken
subcube Q_{theta r}(s).  The property quantifies over uncountably many cubes,
so verification is randomized: sample cubes, search witnesses exhaustively in
exact rational arithmetic, report per-trial results.

Cubes use the half-side convention Q_r(y) = y + [-r, r]^d; m-adic cubes at
level n sit on the lattice m^(-n) Z^d with half-side m^(-n).
"""

from __future__ import annotations

import csv
import itertools
import math
import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

XI_ENUMERATION_CAP = 2_000_000


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box, exact rational corners."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("corner dimension mismatch")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box with negative extent")

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, c, d, b in zip(self.lo, other.lo, other.hi, self.hi))

    def intersect(self, other: "Box") -> Optional["Box"]:
        lo = tuple(max(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(min(b, d) for b, d in zip(self.hi, other.hi))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def translate(self, shift: Sequence) -> "Box":
        return Box(
            tuple(a + s for a, s in zip(self.lo, shift)),
            tuple(b + s for b, s in zip(self.hi, shift)),
        )


def cube_box(center: Sequence, half_side) -> Box:
    return Box(tuple(c - half_side for c in center), tuple(c + half_side for c in center))


@dataclass(frozen=True)
class DenseSystem:
    """Levels of box unions inside an ambient box, with density parameters (m, theta)."""

    dimension: int
    ambient: Box
    levels: tuple          # levels[j-1] = tuple of Box
    m: int
    theta: Fraction

    def __post_init__(self):
        if self.m <= 1:
            raise ValueError("m must exceed 1")
        if not (0 < self.theta < 1):
            raise ValueError("theta must lie in (0, 1)")
        for level in self.levels:
            for box in level:
                if box.dimension != self.dimension:
                    raise ValueError("box dimension mismatch")
                if not self.ambient.contains_box(box):
                    raise ValueError("level box escapes the ambient box")

    def level(self, j: int) -> tuple:
        if not 1 <= j <= len(self.levels):
            raise ValueError(f"level {j} not built (have {len(self.levels)})")
        return self.levels[j - 1]

    def translate(self, shift: Sequence) -> "DenseSystem":
        return DenseSystem(
            self.dimension,
            self.ambient.translate(shift),
            tuple(tuple(b.translate(shift) for b in level) for level in self.levels),
            self.m,
            self.theta,
        )


def cantor_level(n: int) -> list[tuple[Fraction, Fraction]]:
    """Closed middle-third intervals removed at step n, numbered left to right.

    2^(n-1) intervals of length 3^(-n); pairwise disjoint across all levels.
    """
    if n < 1:
        raise ValueError("level index starts at 1")
    kept = [(Fraction(0), Fraction(1))]
    for _ in range(n - 1):
        nxt = []
        for a, b in kept:
            w = (b - a) / 3
            nxt.append((a, a + w))
            nxt.append((b - w, b))
        kept = nxt
    out = []
    for a, b in kept:
        w = (b - a) / 3
        out.append((a + w, b - w))
    return out


def cantor_system(n_levels: int, m: int = 3, theta: Fraction = Fraction(1, 9)) -> DenseSystem:
    """One-dimensional middle-third system on [0, 1]; dense with (m, theta) = (3, 1/9)."""
    levels = tuple(
        tuple(Box((a,), (b,)) for a, b in cantor_level(j)) for j in range(1, n_levels + 1)
    )
    return DenseSystem(1, Box((Fraction(0),), (Fraction(1),)), levels, m, Fraction(theta))


def product_system(base: DenseSystem, d: int, shift: Optional[Sequence] = None) -> DenseSystem:
    """Extend a 1-d system to d dimensions by crossing with the full unit box.

    Each base interval becomes interval x [0,1]^(d-1); an optional integer
    shift translates the whole system.
    """
    if base.dimension != 1:
        raise ValueError("base system must be one-dimensional")
    zeros = tuple(Fraction(0) for _ in range(d - 1))
    ones = tuple(Fraction(1) for _ in range(d - 1))
    ambient = Box(base.ambient.lo + zeros, base.ambient.hi + ones)
    levels = tuple(
        tuple(Box(b.lo + zeros, b.hi + ones) for b in level) for level in base.levels
    )
    system = DenseSystem(d, ambient, levels, base.m, base.theta)
    if shift is not None:
        system = system.translate(tuple(Fraction(s) for s in shift))
    return system


def full_cube_system(d: int, n_levels: int, m: int = 3, theta: Fraction = Fraction(1, 9)) -> DenseSystem:
    """Every level is the whole unit box; trivially dense."""
    box = Box(tuple(Fraction(0) for _ in range(d)), tuple(Fraction(1) for _ in range(d)))
    return DenseSystem(d, box, tuple((box,) for _ in range(n_levels)), m, Fraction(theta))


# -- admissible m-adic indices --------------------------------------------------


def _axis_lattice_range(lo: Fraction, hi: Fraction, h: Fraction) -> range:
    """Integers i with [i*h - h, i*h + h] inside [lo, hi]."""
    start = math.ceil((lo + h) / h)
    stop = math.floor((hi - h) / h)
    return range(start, stop + 1)


def xi_admissible(system: DenseSystem, n: int, j: int) -> list[tuple]:
    """Lattice centers xi in m^(-n) Z^d whose cube Q_{m^(-n)}(xi) fits inside level j.

    Exact rational containment; may be empty (with the half-side convention a
    level-n cube is wider than a level-n interval, so j = n never admits).
    """
    h = Fraction(1, system.m**n)
    seen: dict[tuple, None] = {}
    for box in system.level(j):
        ranges = [_axis_lattice_range(lo, hi, h) for lo, hi in zip(box.lo, box.hi)]
        count = 1
        for rg in ranges:
            count *= max(0, len(rg))
        if count == 0:
            continue
        if count > XI_ENUMERATION_CAP:
            raise ValueError("admissible index enumeration too large")
        for combo in itertools.product(*ranges):
            seen.setdefault(tuple(i * h for i in combo), None)
    return list(seen.keys())


def xi_admissible_union(system: DenseSystem, n: int) -> dict:
    """All admissible centers for levels 1..n, mapped to their smallest level."""
    out: dict = {}
    for j in range(1, min(n, len(system.levels)) + 1):
        for xi in xi_admissible(system, n, j):
            out.setdefault(xi, j)
    return out


# -- randomized density verification --------------------------------------------


class _LevelIndex:
    """Per-level boxes sorted along axis 0 for contiguous-window overlap queries.

    Boxes within one level are disjoint along axis 0 for interval-product
    systems; for general systems the window is merely a superset, which is
    still sound (extra candidates are filtered by exact intersection).
    """

    def __init__(self, system: DenseSystem):
        self.sorted_levels = []
        for level in system.levels:
            boxes = sorted(level, key=lambda b: (b.lo[0], b.hi[0]))
            lo0 = [b.lo[0] for b in boxes]
            hi0 = [b.hi[0] for b in boxes]
            self.sorted_levels.append((boxes, lo0, hi0))

    def candidates(self, j: int, q_lo, q_hi):
        boxes, lo0, hi0 = self.sorted_levels[j - 1]
        start = bisect_left(hi0, q_lo)
        stop = bisect_right(lo0, q_hi)
        return boxes[start:stop]


@dataclass
class DenseTrial:
    index: int
    r: Fraction
    z: tuple
    passed: bool
    level: Optional[int] = None
    witness: Optional[tuple] = None
    note: str = ""


@dataclass
class DenseSystemReport:
    system_levels: int
    m: int
    theta: Fraction
    trials: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(t.passed for t in self.trials)

    @property
    def pass_rate(self) -> float:
        if not self.trials:
            return 0.0
        return sum(t.passed for t in self.trials) / len(self.trials)


def level_budget(system: DenseSystem, r: Fraction) -> int:
    """Largest j with m^j <= 1/(theta r); 0 when even j = 1 is out of budget."""
    j = 0
    power = 1
    while power * system.m * system.theta * r <= 1:
        power *= system.m
        j += 1
    return j


def find_witness(system: DenseSystem, z: Sequence[Fraction], r: Fraction, index: Optional[_LevelIndex] = None):
    """Exact witness (j, box, s) with Q_{theta r}(s) inside box ∩ Q_r(z), or None."""
    if index is None:
        index = _LevelIndex(system)
    query = cube_box(z, r)
    shrink = system.theta * r
    j_max = min(level_budget(system, r), len(system.levels))
    for j in range(1, j_max + 1):
        for box in index.candidates(j, query.lo[0], query.hi[0]):
            inter = box.intersect(query)
            if inter is None:
                continue
            if all(b - a >= 2 * shrink for a, b in zip(inter.lo, inter.hi)):
                s = tuple((a + b) / 2 for a, b in zip(inter.lo, inter.hi))
                return j, box, s
    return None


def witness_is_sound(system: DenseSystem, z, r, j, box, s) -> bool:
    """Re-check a reported witness by exact containment."""
    shrunk = cube_box(s, system.theta * r)
    inter = box.intersect(cube_box(z, r))
    return inter is not None and inter.contains_box(shrunk)


def verify_dense_system(
    system: DenseSystem,
    n_trials: int,
    rng_seed: int,
    r_min: Optional[Fraction] = None,
    r_max: Optional[Fraction] = None,
) -> DenseSystemReport:
    """Sample random cubes Q_r(z) in the ambient box and search exact witnesses.

    r is drawn log-uniformly across the levels the system actually carries (so
    the level budget stays within the built levels), z uniformly on a fine
    rational grid keeping the cube inside the ambient box.  Deterministic for
    a fixed seed.
    """
    rng = random.Random(rng_seed)
    m, theta = system.m, system.theta
    cap = min(Fraction(1), Fraction(1) / (theta * m * m))
    built = len(system.levels)
    min_span = min(hi - lo for lo, hi in zip(system.ambient.lo, system.ambient.hi))
    if r_max is None:
        r_max = min(cap, min_span / 2) * Fraction(7, 8)
    if r_min is None:
        # keep floor(log_m(1/(theta r))) within the built levels
        r_min = Fraction(9, 8) / (theta * Fraction(m) ** (built + 1))
        r_min = min(r_min, r_max / 2)
    index = _LevelIndex(system)
    report = DenseSystemReport(built, m, theta)
    grid = 64
    span = list(zip(system.ambient.lo, system.ambient.hi))
    for k in range(n_trials):
        depth = rng.randint(0, max(1, built - 1))
        r = r_max * Fraction(rng.randint(grid // 2, grid), grid) / Fraction(m) ** depth
        r = max(r, r_min)
        z = tuple(
            lo + r + (hi - lo - 2 * r) * Fraction(rng.randint(0, grid), grid)
            for lo, hi in span
        )
        if level_budget(system, r) < 1:
            report.trials.append(DenseTrial(k, r, z, False, note="empty level budget"))
            continue
        found = find_witness(system, z, r, index)
        if found is None:
            report.trials.append(DenseTrial(k, r, z, False, note="no witness"))
        else:
            j, box, s = found
            report.trials.append(DenseTrial(k, r, z, True, level=j, witness=s))
    return report


# -- CSV interfaces --------------------------------------------------------------


def save_system_csv(system: DenseSystem, path) -> None:
    """Rows `level, a1, b1, ..., ad, bd` with exact rational corners."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["level"]
        for k in range(system.dimension):
            header += [f"a{k+1}", f"b{k+1}"]
        writer.writerow(header)
        for j, level in enumerate(system.levels, start=1):
            for box in level:
                row = [j]
                for a, b in zip(box.lo, box.hi):
                    row += [str(Fraction(a)), str(Fraction(b))]
                writer.writerow(row)


def load_system_csv(path, m: int, theta: Fraction, ambient: Box) -> DenseSystem:
    levels: dict[int, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        axes = sum(1 for c in reader.fieldnames if c.startswith("a") and c[1:].isdigit())
        for rec in reader:
            j = int(rec["level"])
            lo = tuple(Fraction(rec[f"a{k+1}"]) for k in range(axes))
            hi = tuple(Fraction(rec[f"b{k+1}"]) for k in range(axes))
            levels.setdefault(j, []).append(Box(lo, hi))
    ordered = tuple(tuple(levels.get(j, ())) for j in range(1, max(levels) + 1))
    return DenseSystem(ambient.dimension, ambient, ordered, m, theta)


def save_report_csv(report: DenseSystemReport, path, dimension: int) -> None:
    """Rows `trial, r, z1..zd, pass, j, s1..sd, note` (witness empty on failure)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["trial", "r"] + [f"z{k+1}" for k in range(dimension)] + ["pass", "j"]
        header += [f"s{k+1}" for k in range(dimension)] + ["note"]
        writer.writerow(header)
        for t in report.trials:
            witness = list(t.witness or ())
            witness += [""] * (dimension - len(witness))
            zcols = [str(c) for c in t.z] + [""] * (dimension - len(t.z))
            row = [t.index, str(t.r)] + zcols
            row += [int(t.passed), t.level if t.level is not None else ""]
            row += [str(c) if c != "" else "" for c in witness]
            row += [t.note]
            writer.writerow(row)

"""Monotone set functions on finite ground sets, Choquet integration and the
base polyhedron of a submodular function.

Set functions are stored as full tables indexed by subset bitmask (ground size
capped at 20).  Everything here is exact when fed exact numbers: the duality
checks in the test-suite are identities, not approximations.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

from ._util import Number

MAX_GROUND = 20


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class MonotoneSetFunction:
    """Value table over all subsets of {0, .., n-1}, indexed by bitmask."""

    n: int
    table: tuple

    def __post_init__(self):
        if not (1 <= self.n <= MAX_GROUND):
            raise ValueError(f"ground size must be in [1, {MAX_GROUND}]")
        if len(self.table) != 1 << self.n:
            raise ValueError("table must have 2^n entries")
        if self.table[0] != 0:
            raise ValueError("value at the empty set must be 0")

    def __call__(self, mask: int) -> Number:
        return self.table[mask]

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def is_monotone(self) -> bool:
        for mask in range(1 << self.n):
            for i in range(self.n):
                if not mask >> i & 1:
                    if self.table[mask | 1 << i] < self.table[mask]:
                        return False
        return True

    def is_submodular(self) -> bool:
        """Diminishing-returns check: adding i helps less once j is present."""
        for mask in range(1 << self.n):
            for i in range(self.n):
                if mask >> i & 1:
                    continue
                gain_i = self.table[mask | 1 << i] - self.table[mask]
                for j in range(i + 1, self.n):
                    if mask >> j & 1:
                        continue
                    with_j = mask | 1 << j
                    if self.table[with_j | 1 << i] - self.table[with_j] > gain_i:
                        return False
        return True


def from_callable(n: int, fn: Callable[[frozenset], Number]) -> MonotoneSetFunction:
    table = []
    for mask in range(1 << n):
        table.append(fn(frozenset(i for i in range(n) if mask >> i & 1)))
    return MonotoneSetFunction(n, tuple(table))


def choquet_integral(v: MonotoneSetFunction, f: Sequence[Number]) -> Number:
    """Layer-cake integral of the point values f >= 0 against the set function v.

    Distinct levels l1 > l2 > ... > lm (> 0 implicit) contribute
    (lk - l(k+1)) * v({f >= lk}); exact for exact inputs.
    """
    if len(f) != v.n:
        raise ValueError("f must assign a value to every ground element")
    for x in f:
        if x < 0:
            raise ValueError("f must be non-negative")
    levels = sorted(set(f), reverse=True)
    total = 0
    for k, level in enumerate(levels):
        if level == 0:
            break
        mask = 0
        for i, x in enumerate(f):
            if x >= level:
                mask |= 1 << i
        nxt = levels[k + 1] if k + 1 < len(levels) else 0
        total = total + v(mask) * (level - nxt)
    return total


def dual_set_function(v: MonotoneSetFunction) -> MonotoneSetFunction:
    """Pointwise dual w(A) = v(ground) - v(complement of A); supermodular iff v submodular."""
    full = v.full_mask
    top = v(full)
    table = tuple(top - v(full ^ mask) for mask in range(1 << v.n))
    return MonotoneSetFunction(v.n, table)


def _greedy_vertex_unchecked(v: MonotoneSetFunction, ordering: Sequence[int]) -> tuple:
    mu = [0] * v.n
    mask = 0
    for i in ordering:
        new = mask | 1 << i
        mu[i] = v(new) - v(mask)
        mask = new
    return tuple(mu)


def greedy_base_vertex(v: MonotoneSetFunction, ordering: Sequence[int]) -> tuple:
    """Marginal-gain vector along the ordering's prefixes; a base-polyhedron vertex
    for submodular monotone v."""
    if sorted(ordering) != list(range(v.n)):
        raise ValueError("ordering must be a permutation of range(n)")
    if not v.is_submodular():
        raise ValueError("greedy vertices require a submodular set function")
    return _greedy_vertex_unchecked(v, ordering)


def measure_subset_sums(mu: Sequence[Number]) -> list:
    sums = [0]
    for x in mu:
        sums += [s + x for s in sums]
    return sums


def in_base_polyhedron(mu: Sequence[Number], v: MonotoneSetFunction) -> bool:
    """mu(A) <= v(A) for every A, with a tight total mass."""
    if len(mu) != v.n:
        raise ValueError("dimension mismatch")
    if any(x < 0 for x in mu):
        return False
    sums = measure_subset_sums(mu)
    if sums[v.full_mask] != v(v.full_mask):
        return False
    return all(sums[mask] <= v(mask) for mask in range(1 << v.n))


def in_core_of_dual(mu: Sequence[Number], v: MonotoneSetFunction) -> bool:
    """Membership in the core of the dual (supermodular) set function:
    mu(A) >= dual(A) for every A with a tight total."""
    w = dual_set_function(v)
    if len(mu) != v.n:
        raise ValueError("dimension mismatch")
    sums = measure_subset_sums(mu)
    if sums[v.full_mask] != w(v.full_mask):
        return False
    return all(sums[mask] >= w(mask) for mask in range(1 << v.n))


class BasePolyhedronMax(NamedTuple):
    value: Number            # best found (enumerated when available, else greedy)
    enumerated: Number | None  # max over all n! greedy vertices, n <= 8 only
    greedy: Number           # single greedy vertex for the f-descending ordering


ENUMERATION_LIMIT = 8


def base_polyhedron_max(v: MonotoneSetFunction, f: Sequence[Number]) -> BasePolyhedronMax:
    """Maximise <mu, f> over the base polyhedron of a submodular monotone v.

    Two routes for cross-checking: exhaustive enumeration of the greedy
    vertices of all n! orderings (n <= 8), and the single greedy vertex for
    the f-descending ordering (any n).
    """
    if len(f) != v.n:
        raise ValueError("dimension mismatch")
    if not v.is_submodular():
        raise ValueError("base polyhedron maximisation requires a submodular set function")
    order_desc = sorted(range(v.n), key=lambda i: f[i], reverse=True)
    mu = _greedy_vertex_unchecked(v, order_desc)
    greedy_val = sum(m * x for m, x in zip(mu, f))
    enumerated = None
    if v.n <= ENUMERATION_LIMIT:
        best = None
        for perm in itertools.permutations(range(v.n)):
            vertex = _greedy_vertex_unchecked(v, perm)
            score = sum(m * x for m, x in zip(vertex, f))
            if best is None or score > best:
                best = score
        enumerated = best
    value = enumerated if enumerated is not None else greedy_val
    return BasePolyhedronMax(value, enumerated, greedy_val)


# -- provably submodular random generators ------------------------------------

def coverage_function(n: int, element_sets: Sequence[frozenset], weights: dict) -> MonotoneSetFunction:
    """v(A) = total weight covered by the union of the elements' sets."""

    def value(subset: frozenset) -> Number:
        covered = set()
        for i in subset:
            covered |= element_sets[i]
        return sum(weights[u] for u in covered)

    return from_callable(n, value)


def concave_cardinality_function(n: int, increments: Sequence[Number]) -> MonotoneSetFunction:
    """v(A) = sum of the first |A| increments; submodular iff increments non-increasing."""
    if len(increments) != n:
        raise ValueError("need one increment per ground element")
    if any(increments[k] < increments[k + 1] for k in range(n - 1)):
        raise ValueError("increments must be non-increasing")
    prefix = [0]
    for c in increments:
        prefix.append(prefix[-1] + c)
    return MonotoneSetFunction(n, tuple(prefix[_popcount(mask)] for mask in range(1 << n)))


def random_submodular(n: int, rng, max_den: int = 8) -> MonotoneSetFunction:
    """Random mixture of a coverage function and a concave-of-cardinality function.

    Both parts are provably submodular and monotone with non-negative rational
    values, so the mixture is too.
    """
    universe = max(2, 2 * n)
    element_sets = [
        frozenset(u for u in range(universe) if rng.random() < 0.5) for _ in range(n)
    ]
    weights = {u: Fraction(rng.randint(1, max_den), rng.randint(1, max_den)) for u in range(universe)}
    cover = coverage_function(n, element_sets, weights)
    steps = sorted(
        (Fraction(rng.randint(1, max_den), rng.randint(1, max_den)) for _ in range(n)),
        reverse=True,
    )
    conc = concave_cardinality_function(n, steps)
    a = Fraction(rng.randint(0, 4), 4)
    table = tuple(a * cover(m) + (1 - a) * conc(m) for m in range(1 << n))
    return MonotoneSetFunction(n, table)


# -- CSV interface -------------------------------------------------------------

def save_set_function_csv(v: MonotoneSetFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bitmask", "value"])
        for mask in range(1 << v.n):
            writer.writerow([mask, str(v(mask))])


def load_set_function_csv(path, exact: bool = True) -> MonotoneSetFunction:
    rows = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows[int(rec["bitmask"])] = Fraction(rec["value"]) if exact else float(rec["value"])
    size = len(rows)
    n = size.bit_length() - 1
    if 1 << n != size:
        raise ValueError("table size must be a power of two")
    return MonotoneSetFunction(n, tuple(rows[m] for m in range(size)))

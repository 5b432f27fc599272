"""Extremal set-function problem: minimise the integral of W over sets of mass >= t.

Two routes are kept deliberately independent:

  * ``fractional_min_integral`` -- closed form for the fractional relaxation
    (fill the smallest values first, split the boundary level);
  * ``min_integral_bruteforce`` -- exact minimum over genuine subsets by
    subset-sum enumeration.

On atomic spaces the fractional value is a lower bound for the subset value;
the two coincide whenever t hits an exact cumulative level-set mass, and in
the refinement limit where every atom is split into many equal parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._util import Number, all_exact
from .rearrange import WeightedSample, rearrange_dec, rearrange_inc

BRUTE_FORCE_ATOM_LIMIT = 22


@dataclass(frozen=True)
class ExtremalInstance:
    sample: WeightedSample
    t: Number

    def __post_init__(self):
        if not (0 < self.t < self.sample.total):
            raise ValueError(f"t={self.t!r} outside (0, total mass)")


def fractional_min_integral(instance: ExtremalInstance) -> Number:
    """Value of the fractional relaxation at mass t.

    With s* the non-decreasing rearrangement at t, this is the full integral
    over the strict sublevel set {W < s*} plus the missing mass taken at
    level s*.
    """
    sample, t = instance.sample, instance.t
    s_star = rearrange_inc(sample, t)
    below = 0
    below_mass = 0
    for v, w in zip(sample.values, sample.weights):
        if v < s_star:
            below = below + v * w
            below_mass = below_mass + w
    return below + (t - below_mass) * s_star


def _subset_sums_int(items: list[int]) -> list[int]:
    sums = [0]
    for x in items:
        sums += [s + x for s in sums]
    return sums


def _subset_sums_float(items: np.ndarray) -> np.ndarray:
    sums = np.zeros(1)
    for x in items:
        sums = np.concatenate([sums, sums + x])
    return sums


def min_integral_bruteforce(
    instance: ExtremalInstance, return_set: bool = False
) -> Number | tuple[Number, frozenset]:
    """Exact minimum of sum(W over E) over subsets E with mass(E) >= t.

    Subset sums are tabulated with a low-bit recurrence over all 2^n masks
    (exact in scaled integers when inputs are exact, float otherwise).
    """
    sample, t = instance.sample, instance.t
    n = len(sample)
    if n > BRUTE_FORCE_ATOM_LIMIT:
        raise ValueError(f"too many atoms for enumeration: {n} > {BRUTE_FORCE_ATOM_LIMIT}")

    exact = all_exact(sample.values) and all_exact(sample.weights) and all_exact([t])
    if exact:
        wden = math.lcm(Fraction(t).denominator, *(Fraction(w).denominator for w in sample.weights))
        vden = math.lcm(*(Fraction(v).denominator for v in sample.values))
        w_int = [int(Fraction(w) * wden) for w in sample.weights]
        v_int = [int(Fraction(v) * vden) for v in sample.values]
        t_int = int(Fraction(t) * wden)
        cost_int = [v * w for v, w in zip(v_int, w_int)]
        wsums = _subset_sums_int(w_int)
        csums = _subset_sums_int(cost_int)
        best = None
        best_mask = 0
        for mask in range(1, 1 << n):
            if wsums[mask] >= t_int and (best is None or csums[mask] < best):
                best = csums[mask]
                best_mask = mask
        value = Fraction(best, vden * wden)
    else:
        w = np.asarray(sample.weights, dtype=float)
        c = np.asarray(sample.values, dtype=float) * w
        wsums = _subset_sums_float(w)
        csums = _subset_sums_float(c)
        feasible = wsums >= float(t)
        feasible[0] = False
        if not feasible.any():
            raise ValueError("no feasible subset")
        cand = np.where(feasible)[0]
        best_mask = int(cand[np.argmin(csums[cand])])
        value = float(csums[best_mask])

    if return_set:
        return value, frozenset(i for i in range(n) if best_mask >> i & 1)
    return value


def check_rearrangement_bounds(
    instance: ExtremalInstance, theta: Number, t: Number
) -> tuple[bool, bool]:
    """Two-sided bounds linking the fractional minimum to the decreasing rearrangement.

    lower: J(total - t/theta) >= ((theta-1) t / theta) * dec(t)
    upper: J(total - t)       <= (total - t) * dec(t)

    Exact comparisons for exact inputs, 1e-12 relative slack in float mode.
    """
    if not theta > 1:
        raise ValueError("theta must exceed 1")
    sample = instance.sample
    total = sample.total
    for tau in (total - t / theta, total - t):
        if not (0 < tau < total):
            raise ValueError(f"mass argument {tau!r} outside (0, total)")
    dec_t = rearrange_dec(sample, t)
    j_lower = fractional_min_integral(ExtremalInstance(sample, total - t / theta))
    j_upper = fractional_min_integral(ExtremalInstance(sample, total - t))
    lhs_low = j_lower
    rhs_low = (theta - 1) * t / theta * dec_t
    lhs_up = j_upper
    rhs_up = (total - t) * dec_t
    exact = all_exact(sample.values) and all_exact(sample.weights) and all_exact([t, theta])
    if exact:
        return (lhs_low >= rhs_low, lhs_up <= rhs_up)
    slack = 1e-12
    scale_low = max(abs(float(lhs_low)), abs(float(rhs_low)), 1.0)
    scale_up = max(abs(float(lhs_up)), abs(float(rhs_up)), 1.0)
    return (
        float(lhs_low) >= float(rhs_low) - slack * scale_low,
        float(lhs_up) <= float(rhs_up) + slack * scale_up,
    )


def refine(sample: WeightedSample, k: int) -> WeightedSample:
    """Split every atom into k equal parts (leaves the value distribution intact)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = []
    wts = []
    for v, w in zip(sample.values, sample.weights):
        part = Fraction(w, k) if isinstance(w, int) else w / k
        for _ in range(k):
            vals.append(v)
            wts.append(part)
    return WeightedSample(vals, wts)
